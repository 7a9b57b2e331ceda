"""Synthetic corpora with a planted three-part narrative structure.

Every text has a circumstance part, an accident part and, with probability
``comment_probability``, a comment part.  Sentences are generated by one of
four regimes:

* ``C``  (circumstances) - every part-1 sentence except the last one;
* ``CA`` (appearance of an incident) - the last sentence of a part 1 that
  has at least two sentences;
* ``AA`` (actions leading to the accident) - part-2 sentences;
* ``IC`` (impact and comments) - part-3 sentences.

Within a sentence the first verb is drawn from the regime's first-verb
distribution and each following verb from the regime's conditional
distribution given the previous verb.  ``delta`` sets how peaked the
regimes are: with probability ``1 - delta`` a drawn verb is perturbed by
re-drawing either its category or its tense from the shared noise
marginals, so ``effective = delta * regime + (1 - delta) * regime @ K``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import AGENTS, CATEGORIES, GROUNDS, TENSES, Corpus, VerbToken
from .errors import InvalidSpec

PAIRS = tuple((c, t) for c in CATEGORIES for t in TENSES)
PAIR_INDEX = {p: i for i, p in enumerate(PAIRS)}
REGIME_NAMES = ("C", "CA", "AA", "IC")

_TOL = 1e-9


def pair_key(pair) -> str:
    return f"{pair[0]}:{pair[1]}"


def _parse_key(key: str) -> tuple[str, str]:
    cat, tense = key.split(":")
    if (cat, tense) not in PAIR_INDEX:
        raise InvalidSpec(f"unknown (category, tense) pair {key!r}")
    return cat, tense


def pair_vector(dist: dict) -> np.ndarray:
    """Dense 36-vector from ``{(cat, tense) or "cat:tense": prob}``."""
    vec = np.zeros(len(PAIRS))
    for key, p in dist.items():
        pair = _parse_key(key) if isinstance(key, str) else tuple(key)
        vec[PAIR_INDEX[pair]] += p
    return vec


def _check_dist(values, name):
    values = np.asarray(values, dtype=float)
    if np.any(values < 0) or abs(values.sum() - 1.0) > _TOL:
        raise InvalidSpec(f"{name} is not a normalized distribution (sum={values.sum():.12g})")


@dataclass(frozen=True, eq=False)
class Regime:
    name: str
    first: np.ndarray
    transition: np.ndarray
    ground: dict = field(default_factory=lambda: {"fore": 0.0, "back": 0.0, "none": 1.0})
    agent: dict = field(default_factory=lambda: {"A": 0.0, "B": 0.0, "C": 0.0, "none": 1.0})
    causal: float = 0.0
    impact: float = 0.0
    negation: float = 0.0
    inertia: float = 0.0

    @classmethod
    def from_patterns(cls, name, first, rows=None, default=None, **annotations):
        """Build a regime from sparse ``cat:tense`` dictionaries.

        ``rows`` maps a previous verb to its next-verb distribution; every
        other previous verb uses ``default``.
        """
        rows = rows or {}
        default_vec = pair_vector(default if default is not None else first)
        trans = np.tile(default_vec, (len(PAIRS), 1))
        for key, dist in rows.items():
            trans[PAIR_INDEX[_parse_key(key)]] = pair_vector(dist)
        return cls(name, pair_vector(first), trans, **annotations)

    def validate(self):
        _check_dist(self.first, f"{self.name}.first")
        for i, row in enumerate(self.transition):
            _check_dist(row, f"{self.name}.transition[{pair_key(PAIRS[i])}]")
        _check_dist([self.ground.get(g, 0.0) for g in GROUNDS], f"{self.name}.ground")
        _check_dist([self.agent.get(a, 0.0) for a in AGENTS], f"{self.name}.agent")
        if set(self.ground) - set(GROUNDS) or set(self.agent) - set(AGENTS):
            raise InvalidSpec(f"{self.name}: unknown ground/agent value")
        for attr in ("causal", "impact", "negation", "inertia"):
            p = getattr(self, attr)
            if not 0.0 <= p <= 1.0:
                raise InvalidSpec(f"{self.name}.{attr} must be a probability")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "first": _sparse(self.first),
            "transition": {pair_key(PAIRS[i]): _sparse(row)
                           for i, row in enumerate(self.transition)},
            "ground": dict(self.ground), "agent": dict(self.agent),
            "causal": self.causal, "impact": self.impact,
            "negation": self.negation, "inertia": self.inertia,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Regime":
        trans = np.zeros((len(PAIRS), len(PAIRS)))
        for key, row in data["transition"].items():
            trans[PAIR_INDEX[_parse_key(key)]] = pair_vector(row)
        return cls(data["name"], pair_vector(data["first"]), trans,
                   dict(data["ground"]), dict(data["agent"]),
                   float(data["causal"]), float(data["impact"]),
                   float(data["negation"]), float(data["inertia"]))


def _sparse(vec) -> dict:
    return {pair_key(PAIRS[i]): float(v) for i, v in enumerate(vec) if v > 0}


def _int_dist(d: dict) -> dict[int, float]:
    return {int(k): float(v) for k, v in d.items()}


@dataclass(frozen=True, eq=False)
class RegimeSpec:
    regimes: tuple[Regime, ...]
    part_lengths: dict
    verbs_per_sentence: dict
    noise_categories: np.ndarray
    noise_tenses: np.ndarray
    delta: float = 0.9
    comment_probability: float = 0.5

    def validate(self) -> "RegimeSpec":
        if len(self.regimes) != len(REGIME_NAMES):
            raise InvalidSpec(f"expected {len(REGIME_NAMES)} regimes {REGIME_NAMES}")
        for r in self.regimes:
            r.validate()
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidSpec("delta must lie in [0, 1]")
        if not 0.0 <= self.comment_probability <= 1.0:
            raise InvalidSpec("comment_probability must lie in [0, 1]")
        _check_dist(self.noise_categories, "noise_categories")
        _check_dist(self.noise_tenses, "noise_tenses")
        for part in (1, 2, 3):
            if part not in self.part_lengths:
                raise InvalidSpec(f"missing sentence-count distribution for part {part}")
            lengths = self.part_lengths[part]
            if min(lengths) < 1:
                raise InvalidSpec("parts hold at least one sentence")
            _check_dist(list(lengths.values()), f"part_lengths[{part}]")
        if min(self.verbs_per_sentence) < 2:
            raise InvalidSpec("generated sentences hold at least two verbs")
        _check_dist(list(self.verbs_per_sentence.values()), "verbs_per_sentence")
        return self

    def perturbation(self) -> np.ndarray:
        """36x36 kernel re-drawing either the category or the tense of a verb."""
        nc, nt = len(CATEGORIES), len(TENSES)
        cat = np.asarray(self.noise_categories, dtype=float)
        tense = np.asarray(self.noise_tenses, dtype=float)
        kernel = np.zeros((len(PAIRS), len(PAIRS)))
        for ci in range(nc):
            for ti in range(nt):
                row = kernel[ci * nt + ti]
                row[np.arange(nc) * nt + ti] += 0.5 * cat
                row[ci * nt + np.arange(nt)] += 0.5 * tense
        return kernel

    def effective_first(self, r: int) -> np.ndarray:
        first = self.regimes[r].first
        return self.delta * first + (1 - self.delta) * first @ self.perturbation()

    def effective_transition(self, r: int) -> np.ndarray:
        trans = self.regimes[r].transition
        return self.delta * trans + (1 - self.delta) * trans @ self.perturbation()

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "comment_probability": self.comment_probability,
            "part_lengths": {str(p): {str(k): v for k, v in d.items()}
                             for p, d in self.part_lengths.items()},
            "verbs_per_sentence": {str(k): v for k, v in self.verbs_per_sentence.items()},
            "noise_categories": dict(zip(CATEGORIES, map(float, self.noise_categories))),
            "noise_tenses": dict(zip(TENSES, map(float, self.noise_tenses))),
            "regimes": [r.to_dict() for r in self.regimes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegimeSpec":
        try:
            spec = cls(
                regimes=tuple(Regime.from_dict(r) for r in data["regimes"]),
                part_lengths={int(p): _int_dist(d) for p, d in data["part_lengths"].items()},
                verbs_per_sentence=_int_dist(data["verbs_per_sentence"]),
                noise_categories=np.array([float(data["noise_categories"][c])
                                           for c in CATEGORIES]),
                noise_tenses=np.array([float(data["noise_tenses"][t]) for t in TENSES]),
                delta=float(data["delta"]),
                comment_probability=float(data.get("comment_probability", 0.5)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpec):
                raise
            raise InvalidSpec(f"malformed spec: {exc}") from exc
        return spec.validate()

    def replace(self, **changes) -> "RegimeSpec":
        fields = dict(regimes=self.regimes, part_lengths=self.part_lengths,
                      verbs_per_sentence=self.verbs_per_sentence,
                      noise_categories=self.noise_categories,
                      noise_tenses=self.noise_tenses,
                      delta=self.delta, comment_probability=self.comment_probability)
        fields.update(changes)
        return RegimeSpec(**fields).validate()


def load_spec(path) -> RegimeSpec:
    with open(path, encoding="utf-8") as fh:
        return RegimeSpec.from_dict(json.load(fh))


# -- the bundled spec ---------------------------------------------------------

TARGET_CATEGORIES = {"sta": 0.24, "act": 0.10, "acc": 0.34, "ach": 0.32}
TARGET_TENSES = {"IM": 0.24, "PR": 0.06, "PC": 0.34, "PS": 0.01, "PQP": 0.02,
                 "inf": 0.20, "ppr": 0.11, "pp": 0.02, "pps": 0.0}


def default_paper_spec() -> RegimeSpec:
    """Four-regime spec whose implied marginals approximate the reference corpus."""
    circumstances = Regime.from_patterns(
        "C", first={"sta:IM": 1.0}, default={"sta:IM": 1.0},
        ground={"fore": 0.05, "back": 0.80, "none": 0.15},
        agent={"A": 0.70, "B": 0.10, "C": 0.05, "none": 0.15},
        causal=0.02, impact=0.0, negation=0.05, inertia=0.60,
    )
    appearance = Regime.from_patterns(
        "CA", first={"act:inf": 1.0}, default={"act:inf": 1.0},
        ground={"fore": 0.10, "back": 0.70, "none": 0.20},
        agent={"A": 0.45, "B": 0.10, "C": 0.30, "none": 0.15},
        causal=0.10, impact=0.05, negation=0.05, inertia=0.05,
    )
    accident = Regime.from_patterns(
        "AA", first={"acc:PC": 1.0}, default={"acc:PC": 1.0},
        ground={"fore": 0.20, "back": 0.20, "none": 0.60},
        agent={"A": 0.45, "B": 0.40, "C": 0.05, "none": 0.10},
        causal=0.50, impact=0.10, negation=0.10, inertia=0.45,
    )
    impact = Regime.from_patterns(
        "IC", first={"ach:ppr": 1.0}, default={"ach:ppr": 1.0},
        ground={"fore": 0.70, "back": 0.10, "none": 0.20},
        agent={"A": 0.30, "B": 0.50, "C": 0.05, "none": 0.15},
        causal=0.70, impact=0.50, negation=0.10, inertia=0.30,
    )
    return RegimeSpec(
        regimes=(circumstances, appearance, accident, impact),
        part_lengths={1: {1: 0.5, 2: 0.3, 3: 0.2},
                      2: {1: 0.5, 2: 0.3, 3: 0.2},
                      3: {2: 0.2, 3: 0.4, 4: 0.4}},
        verbs_per_sentence={2: 0.7, 3: 0.2, 4: 0.1},
        noise_categories=np.array([TARGET_CATEGORIES[c] for c in CATEGORIES]),
        noise_tenses=np.array([TARGET_TENSES[t] for t in TENSES]),
        delta=0.8,
        comment_probability=0.5,
    ).validate()


# -- implied marginals -------------------------------------------------------

def expected_sentences(spec: RegimeSpec) -> np.ndarray:
    """Expected number of sentences per text generated by each regime."""
    counts = np.zeros(len(REGIME_NAMES))
    for n, p in spec.part_lengths[1].items():
        if n >= 2:
            counts[0] += p * (n - 1)
            counts[1] += p
        else:
            counts[0] += p
    counts[2] = sum(n * p for n, p in spec.part_lengths[2].items())
    counts[3] = spec.comment_probability * sum(n * p for n, p in spec.part_lengths[3].items())
    return counts


def regime_verb_distribution(spec: RegimeSpec, r: int) -> np.ndarray:
    """Expected count of each (category, tense) pair in one sentence of regime ``r``."""
    max_len = max(spec.verbs_per_sentence)
    reach = {k: sum(p for n, p in spec.verbs_per_sentence.items() if n >= k)
             for k in range(1, max_len + 1)}
    dist = spec.effective_first(r)
    trans = spec.effective_transition(r)
    total = np.zeros(len(PAIRS))
    for k in range(1, max_len + 1):
        total += reach[k] * dist
        dist = dist @ trans
    return total


def implied_pair_marginal(spec: RegimeSpec) -> np.ndarray:
    sentences = expected_sentences(spec)
    mass = sum(sentences[r] * regime_verb_distribution(spec, r) for r in range(len(sentences)))
    return mass / mass.sum()


def implied_marginals(spec: RegimeSpec) -> tuple[dict[str, float], dict[str, float]]:
    """Corpus-level category and tense proportions implied by *spec*."""
    joint = implied_pair_marginal(spec).reshape(len(CATEGORIES), len(TENSES))
    cats = {c: float(v) for c, v in zip(CATEGORIES, joint.sum(axis=1))}
    tenses = {t: float(v) for t, v in zip(TENSES, joint.sum(axis=0))}
    return cats, tenses


# -- generation ---------------------------------------------------------------

@dataclass(frozen=True)
class WindowTruth:
    text_id: str
    sent_id: int
    window_start_pos: int
    true_regime: str


@dataclass(frozen=True)
class GroundTruth:
    sentence_parts: dict  # (text_id, sent_id) -> part
    sentence_regimes: dict  # (text_id, sent_id) -> regime name
    windows: tuple[WindowTruth, ...]

    def part_boundaries(self, text_id: str) -> list[int]:
        """Sentence ids where a new part starts within *text_id*."""
        items = sorted((sid, part) for (tid, sid), part in self.sentence_parts.items()
                       if tid == text_id)
        return [sid for (sid, part), (_, prev) in zip(items[1:], items) if part != prev]

    def window_regime(self) -> dict:
        return {(w.text_id, w.sent_id, w.window_start_pos): w.true_regime for w in self.windows}


def _choice(rng, dist: dict):
    keys = list(dist)
    return keys[rng.choice(len(keys), p=np.array([dist[k] for k in keys]) / sum(dist.values()))]


def _draw(rng, probs: np.ndarray) -> int:
    return int(rng.choice(len(probs), p=probs / probs.sum()))


def generate_corpus(spec: RegimeSpec, n_texts: int, seed: int) -> tuple[Corpus, GroundTruth]:
    """Draw ``n_texts`` independent texts; every text uses its own substream."""
    spec.validate()
    tokens: list[VerbToken] = []
    parts: dict = {}
    regimes: dict = {}
    windows: list[WindowTruth] = []
    width = len(str(max(n_texts - 1, 0)))
    for i in range(n_texts):
        rng = np.random.default_rng([seed, i])
        text_id = f"t{i:0{width}d}"
        plan = []
        n1 = _choice(rng, spec.part_lengths[1])
        plan += [(1, 0)] * (n1 - 1) + [(1, 1 if n1 >= 2 else 0)]
        plan += [(2, 2)] * _choice(rng, spec.part_lengths[2])
        if rng.random() < spec.comment_probability:
            plan += [(3, 3)] * _choice(rng, spec.part_lengths[3])
        for sent_id, (part, r) in enumerate(plan):
            regime = spec.regimes[r]
            parts[text_id, sent_id] = part
            regimes[text_id, sent_id] = regime.name
            n_verbs = _choice(rng, spec.verbs_per_sentence)
            first, trans = spec.effective_first(r), spec.effective_transition(r)
            idx = _draw(rng, first)
            for pos in range(n_verbs):
                if pos:
                    idx = _draw(rng, trans[idx])
                    windows.append(WindowTruth(text_id, sent_id, pos - 1, regime.name))
                cat, tense = PAIRS[idx]
                tokens.append(VerbToken(
                    text_id=text_id, sent_id=sent_id, pos=pos,
                    lemma=f"{cat}_{tense}", category=cat, tense=tense, part=part,
                    ground=_choice(rng, regime.ground), agent=_choice(rng, regime.agent),
                    causal=bool(rng.random() < regime.causal),
                    impact=bool(rng.random() < regime.impact),
                    negation=bool(rng.random() < regime.negation),
                    inertia=bool(rng.random() < regime.inertia),
                ))
    return Corpus(tuple(tokens)), GroundTruth(parts, regimes, tuple(windows))


SIDECAR_HEADER = ("text_id", "sent_id", "window_start_pos", "true_regime")


def write_sidecar(truth: GroundTruth, sink) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(SIDECAR_HEADER)
    for w in truth.windows:
        writer.writerow([w.text_id, w.sent_id, w.window_start_pos, w.true_regime])


def read_sidecar(source) -> dict:
    reader = csv.reader(source)
    header = next(reader)
    if tuple(header) != SIDECAR_HEADER:
        raise ValueError("unexpected sidecar header")
    return {(row[0], int(row[1]), int(row[2])): row[3] for row in reader}
