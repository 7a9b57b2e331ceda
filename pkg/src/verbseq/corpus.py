"""Corpus data model, CSV reader/writer, verb encoding and window sampling.

A corpus is a flat list of annotated verb tokens.  Tokens are grouped into
texts and sentences by their ``(text_id, sent_id, pos)`` keys; sentences are
the hard boundary for every sequence built from them.

Each verb is encoded as a 13-dimensional two-hot vector (4 category slots
followed by 9 tense slots) and each pair of consecutive verbs in a sentence
as the 26-dimensional concatenation of both encodings.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import AnnotationError, DuplicateError, EmptyCorpus, FormatError

logger = logging.getLogger(__name__)

CATEGORIES = ("sta", "act", "acc", "ach")
TENSES = ("IM", "PR", "PC", "PS", "PQP", "inf", "ppr", "pp", "pps")
PARTS = (1, 2, 3)
GROUNDS = ("fore", "back", "none")
AGENTS = ("A", "B", "C", "none")

VERB_DIM = len(CATEGORIES) + len(TENSES)
PAIR_DIM = 2 * VERB_DIM

HEADER = (
    "text_id", "sent_id", "pos", "lemma", "category", "tense", "part",
    "ground", "agent", "causal", "impact", "negation", "inertia",
)

_CATEGORY_SLOT = {c: i for i, c in enumerate(CATEGORIES)}
_TENSE_SLOT = {t: len(CATEGORIES) + i for i, t in enumerate(TENSES)}


@dataclass(frozen=True)
class VerbToken:
    text_id: str
    sent_id: int
    pos: int
    category: str
    tense: str
    part: int = 1
    ground: str = "none"
    agent: str = "none"
    causal: bool = False
    impact: bool = False
    negation: bool = False
    inertia: bool = False
    lemma: str | None = None

    def __post_init__(self):
        _check_enum("category", self.category, CATEGORIES)
        _check_enum("tense", self.tense, TENSES)
        _check_enum("part", self.part, PARTS)
        _check_enum("ground", self.ground, GROUNDS)
        _check_enum("agent", self.agent, AGENTS)

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.text_id, self.sent_id, self.pos)

    @property
    def pair(self) -> tuple[str, str]:
        """The ``(category, tense)`` abstraction of this verb."""
        return (self.category, self.tense)


def _check_enum(name, value, allowed):
    if value not in allowed:
        raise AnnotationError(
            f"invalid {name} {value!r}; expected one of {', '.join(map(str, allowed))}",
            field=name,
        )


@dataclass(frozen=True)
class Sentence:
    text_id: str
    sent_id: int
    tokens: tuple[VerbToken, ...]

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class VerbSequence:
    """A sentence holding at least two verbs, tokens ordered by position."""

    text_id: str
    sent_id: int
    tokens: tuple[VerbToken, ...]

    def __post_init__(self):
        if len(self.tokens) < 2:
            raise ValueError("a verb sequence needs at least two verbs")

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Text:
    text_id: str
    sentences: tuple[Sentence, ...]


@dataclass(frozen=True)
class Corpus:
    """Validated collection of verb tokens in file order."""

    tokens: tuple[VerbToken, ...] = ()
    texts: tuple[Text, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "texts", _group(self.tokens))

    def __len__(self):
        return len(self.tokens)

    @property
    def sentences(self) -> list[Sentence]:
        return [s for t in self.texts for s in t.sentences]


def _group(tokens: Iterable[VerbToken]) -> tuple[Text, ...]:
    by_text: dict[str, dict[int, list[VerbToken]]] = {}
    for tok in tokens:
        by_text.setdefault(tok.text_id, {}).setdefault(tok.sent_id, []).append(tok)
    texts = []
    for text_id, sents in by_text.items():
        sentences = tuple(
            Sentence(text_id, sid, tuple(sorted(toks, key=lambda t: t.pos)))
            for sid, toks in sorted(sents.items())
        )
        texts.append(Text(text_id, sentences))
    return tuple(texts)


# -- reading / writing -------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


def _parse_bool(name, raw):
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise AnnotationError(f"invalid {name} {raw!r}; expected 0 or 1", field=name)


def _parse_int(name, raw):
    try:
        return int(raw)
    except ValueError:
        raise AnnotationError(f"invalid {name} {raw!r}; expected an integer", field=name) from None


def _row_to_token(row: list[str]) -> VerbToken:
    values = dict(zip(HEADER, row))
    part = _parse_int("part", values["part"])
    sent_id = _parse_int("sent_id", values["sent_id"])
    pos = _parse_int("pos", values["pos"])
    if sent_id < 0:
        raise AnnotationError(f"invalid sent_id {sent_id}; must be >= 0", field="sent_id")
    if pos < 0:
        raise AnnotationError(f"invalid pos {pos}; must be >= 0", field="pos")
    if not values["text_id"]:
        raise AnnotationError("empty text_id", field="text_id")
    return VerbToken(
        text_id=values["text_id"],
        sent_id=sent_id,
        pos=pos,
        lemma=values["lemma"] or None,
        category=values["category"],
        tense=values["tense"],
        part=part,
        ground=values["ground"],
        agent=values["agent"],
        causal=_parse_bool("causal", values["causal"]),
        impact=_parse_bool("impact", values["impact"]),
        negation=_parse_bool("negation", values["negation"]),
        inertia=_parse_bool("inertia", values["inertia"]),
    )


def _scan(source: TextIO) -> Iterator[tuple[int, VerbToken | Exception]]:
    """Yield ``(line, token or error)`` for every data row of *source*.

    Header problems raise immediately since nothing after them is readable.
    """
    lines = ((n, ln) for n, ln in enumerate(source, start=1)
             if not ln.lstrip().startswith("#") and ln.strip())
    first = next(lines, None)
    if first is None:
        raise FormatError("missing header line")
    header_no, header = first
    if header.rstrip("\r\n") != ",".join(HEADER):
        raise FormatError(f"line {header_no}: header must be exactly {','.join(HEADER)!r}")

    seen: dict[tuple[str, int, int], int] = {}
    for n, ln in lines:
        row = next(csv.reader([ln]))
        if len(row) != len(HEADER):
            yield n, FormatError(f"line {n}: expected {len(HEADER)} fields, got {len(row)}")
            continue
        try:
            tok = _row_to_token(row)
        except AnnotationError as exc:
            yield n, AnnotationError(str(exc), line=n, field=exc.field)
            continue
        if tok.key in seen:
            yield n, DuplicateError(
                f"line {n}: duplicate key (text_id={tok.text_id}, sent_id={tok.sent_id}, "
                f"pos={tok.pos}); first seen on line {seen[tok.key]}")
            continue
        seen[tok.key] = n
        yield n, tok


def _contiguity_errors(tokens_with_lines):
    by_sentence: dict[tuple[str, int], list[tuple[int, int]]] = {}
    for n, tok in tokens_with_lines:
        by_sentence.setdefault((tok.text_id, tok.sent_id), []).append((tok.pos, n))
    for (text_id, sent_id), entries in by_sentence.items():
        positions = sorted(p for p, _ in entries)
        if positions != list(range(len(positions))):
            line = min(n for _, n in entries)
            yield line, AnnotationError(
                f"positions in text {text_id} sentence {sent_id} must be contiguous from 0, "
                f"got {positions}", line=line, field="pos")


def parse_corpus(source: TextIO | str) -> Corpus:
    """Read a corpus CSV stream, raising on the first violation found."""
    if isinstance(source, str):
        source = io.StringIO(source)
    good = []
    for n, item in _scan(source):
        if isinstance(item, Exception):
            raise item
        good.append((n, item))
    for _, err in _contiguity_errors(good):
        raise err
    return Corpus(tuple(tok for _, tok in good))


def validate_corpus(source: TextIO | str) -> list[Violation]:
    """Collect every violation in *source* instead of stopping at the first."""
    if isinstance(source, str):
        source = io.StringIO(source)
    try:
        scanned = list(_scan(source))
    except FormatError as exc:
        return [Violation(1, str(exc))]
    violations = [Violation(n, _strip_line_prefix(str(item)))
                  for n, item in scanned if isinstance(item, Exception)]
    good = [(n, item) for n, item in scanned if not isinstance(item, Exception)]
    violations.extend(Violation(n, _strip_line_prefix(str(err)))
                      for n, err in _contiguity_errors(good))
    return sorted(violations, key=lambda v: v.line)


def _strip_line_prefix(message):
    if message.startswith("line "):
        return message.split(": ", 1)[1]
    return message


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_corpus(fh)


def write_corpus(corpus: Corpus, sink: TextIO) -> None:
    """Serialize *corpus* in canonical field order (inverse of parse_corpus)."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(HEADER)
    for t in corpus.tokens:
        writer.writerow([
            t.text_id, t.sent_id, t.pos, t.lemma or "", t.category, t.tense,
            t.part, t.ground, t.agent, int(t.causal), int(t.impact),
            int(t.negation), int(t.inertia),
        ])


def dumps_corpus(corpus: Corpus) -> str:
    buf = io.StringIO()
    write_corpus(corpus, buf)
    return buf.getvalue()


def bundled_path(name: str):
    """Path-like handle to one of the CSV files shipped with the package."""
    return resources.files("verbseq") / "data" / name


def load_bundled(name: str) -> Corpus:
    return parse_corpus(bundled_path(name).read_text(encoding="utf-8"))


# -- sequences and encoding --------------------------------------------------

def extract_sequences(corpus: Corpus) -> tuple[list[VerbSequence], int]:
    """Return the sentences with two or more verbs, plus the dropped count."""
    sequences = []
    dropped = 0
    for sent in corpus.sentences:
        if len(sent) >= 2:
            sequences.append(VerbSequence(sent.text_id, sent.sent_id, sent.tokens))
        else:
            dropped += 1
    if dropped:
        logger.info("dropped %d sentence(s) with fewer than two verbs", dropped)
    return sequences, dropped


def encode_pair(category: str, tense: str) -> np.ndarray:
    vec = np.zeros(VERB_DIM)
    vec[_CATEGORY_SLOT[category]] = 1.0
    vec[_TENSE_SLOT[tense]] = 1.0
    return vec


def encode_verb(token: VerbToken) -> np.ndarray:
    return encode_pair(token.category, token.tense)


def decode_verb(vector) -> tuple[str, str]:
    """Most likely ``(category, tense)`` of a 13-dim verb block."""
    vector = np.asarray(vector, dtype=float)
    n_cat = len(CATEGORIES)
    return (CATEGORIES[int(np.argmax(vector[:n_cat]))],
            TENSES[int(np.argmax(vector[n_cat:VERB_DIM]))])


@dataclass(frozen=True, eq=False)
class TransitionSample:
    vector: np.ndarray
    source: tuple[str, int, int]
    decoded: tuple[tuple[str, str], tuple[str, str]]


def window_transitions(sequence: VerbSequence, replication: int = 1) -> list[TransitionSample]:
    """Slide a width-2, stride-1 window over *sequence*.

    Each window is emitted ``replication`` times in a row.
    """
    if replication < 1:
        raise ValueError("replication must be a positive integer")
    samples = []
    toks = sequence.tokens
    for left, right in zip(toks, toks[1:]):
        vec = np.concatenate([encode_verb(left), encode_verb(right)])
        vec.flags.writeable = False
        sample = TransitionSample(vec, (sequence.text_id, sequence.sent_id, left.pos),
                                  (left.pair, right.pair))
        samples.extend([sample] * replication)
    return samples


def corpus_transitions(corpus: Corpus, replication: int = 1) -> list[TransitionSample]:
    sequences, _ = extract_sequences(corpus)
    return [s for seq in sequences for s in window_transitions(seq, replication)]


def sample_matrix(samples) -> np.ndarray:
    """Stack transition samples (or raw vectors) into an ``n x d`` array."""
    rows = [s.vector if isinstance(s, TransitionSample) else s for s in samples]
    if not rows:
        return np.zeros((0, PAIR_DIM))
    return np.asarray(np.vstack(rows), dtype=float)


# -- distributions -----------------------------------------------------------

@dataclass(frozen=True)
class DistributionTables:
    n_tokens: int
    category_counts: dict[str, int]
    tense_counts: dict[str, int]
    cross_counts: dict[str, dict[str, int]]

    @property
    def category_percent(self) -> dict[str, float]:
        return {c: 100.0 * n / self.n_tokens for c, n in self.category_counts.items()}

    @property
    def tense_percent(self) -> dict[str, float]:
        return {t: 100.0 * n / self.n_tokens for t, n in self.tense_counts.items()}

    @property
    def tense_by_category(self) -> dict[str, dict[str, float]]:
        """Row percentages; categories absent from the corpus have no row."""
        table = {}
        for cat, row in self.cross_counts.items():
            total = sum(row.values())
            if total:
                table[cat] = {t: 100.0 * n / total for t, n in row.items()}
        return table

    def format(self) -> str:
        out = [f"tokens: {self.n_tokens}", "", f"{'category':<10}{'count':>7}{'percent':>9}"]
        for c in CATEGORIES:
            out.append(f"{c:<10}{self.category_counts[c]:>7}{self.category_percent[c]:>9.2f}")
        out += ["", f"{'tense':<10}{'count':>7}{'percent':>9}"]
        for t in TENSES:
            out.append(f"{t:<10}{self.tense_counts[t]:>7}{self.tense_percent[t]:>9.2f}")
        out += ["", "tense by category (row percent)",
                f"{'category':<10}" + "".join(f"{t:>7}" for t in TENSES)]
        rows = self.tense_by_category
        for c in CATEGORIES:
            if c in rows:
                cells = "".join(f"{rows[c][t]:>7.2f}" for t in TENSES)
            else:
                cells = "".join(f"{'-':>7}" for _ in TENSES)
            out.append(f"{c:<10}{cells}")
        return "\n".join(out) + "\n"


def tabulate_distributions(corpus: Corpus) -> DistributionTables:
    if not corpus.tokens:
        raise EmptyCorpus("cannot tabulate an empty corpus")
    cats = Counter(t.category for t in corpus.tokens)
    tenses = Counter(t.tense for t in corpus.tokens)
    cross = Counter(t.pair for t in corpus.tokens)
    return DistributionTables(
        n_tokens=len(corpus.tokens),
        category_counts={c: cats[c] for c in CATEGORIES},
        tense_counts={t: tenses[t] for t in TENSES},
        cross_counts={c: {t: cross[c, t] for t in TENSES} for c in CATEGORIES},
    )
