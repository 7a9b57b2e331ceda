"""Cluster interpretation: labeled transitions, segmentation, crosstabs,
chi-square association tests and typical-pair extraction."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .clusterer import UnitClustering
from .corpus import (AGENTS, CATEGORIES, GROUNDS, PARTS, TENSES, Corpus, Text,
                     VerbToken, extract_sequences, sample_matrix, window_transitions)
from .errors import DegenerateTable, EmptyInput
from .som import SomMap, best_matching_units, decode_prototype

NONE_CLUSTER = "none"

ANNOTATION_VALUES = {
    "part": PARTS,
    "ground": GROUNDS,
    "agent": AGENTS,
    "causal": (False, True),
    "impact": (False, True),
    "negation": (False, True),
    "inertia": (False, True),
    "category": CATEGORIES,
    "tense": TENSES,
}


def cluster_name(label: int) -> str | int:
    return NONE_CLUSTER if label < 0 else int(label)


@dataclass(frozen=True)
class LabeledTransition:
    source: tuple[str, int, int]
    decoded: tuple[tuple[str, str], tuple[str, str]]
    unit: int
    cluster: int | str
    tokens: tuple[VerbToken, VerbToken]


def assign_transitions(corpus: Corpus, som: SomMap,
                       clustering: UnitClustering) -> list[LabeledTransition]:
    """Label every window of every sequence with its BMU and cluster.

    Windows whose BMU is an unlabeled (empty) unit get the ``none`` cluster.
    """
    sequences, _ = extract_sequences(corpus)
    out = []
    for seq in sequences:
        samples = window_transitions(seq)
        units, _ = best_matching_units(som, sample_matrix(samples))
        for i, (sample, unit) in enumerate(zip(samples, units)):
            out.append(LabeledTransition(
                sample.source, sample.decoded, int(unit),
                cluster_name(clustering.unit_labels[unit]),
                (seq.tokens[i], seq.tokens[i + 1])))
    return out


def none_share(transitions: list[LabeledTransition]) -> float:
    if not transitions:
        return 0.0
    return sum(t.cluster == NONE_CLUSTER for t in transitions) / len(transitions)


# -- segmentation ------------------------------------------------------------

@dataclass(frozen=True)
class Span:
    first_sentence: int
    last_sentence: int
    cluster: int | str


def sentence_labels(text: Text, transitions: list[LabeledTransition]) -> list:
    """Dominant cluster per sentence of *text* (``None`` for window-less ones).

    Majority vote over the sentence's windows; ties go to the cluster of
    the earliest window.
    """
    by_sentence: dict[int, list[LabeledTransition]] = {}
    for t in transitions:
        if t.source[0] == text.text_id:
            by_sentence.setdefault(t.source[1], []).append(t)
    labels = []
    for sent in text.sentences:
        windows = sorted(by_sentence.get(sent.sent_id, []), key=lambda t: t.source[2])
        if not windows:
            labels.append(None)
            continue
        counts = Counter(t.cluster for t in windows)
        top = max(counts.values())
        labels.append(next(t.cluster for t in windows if counts[t.cluster] == top))
    return labels


def segment_text(text: Text, transitions: list[LabeledTransition]) -> list[Span]:
    """Split *text* into runs of sentences sharing a dominant cluster."""
    spans: list[Span] = []
    for sent, label in zip(text.sentences, sentence_labels(text, transitions)):
        if label is None:
            label = spans[-1].cluster if spans else NONE_CLUSTER
        if spans and spans[-1].cluster == label:
            spans[-1] = Span(spans[-1].first_sentence, sent.sent_id, label)
        else:
            spans.append(Span(sent.sent_id, sent.sent_id, label))
    return spans


def span_boundaries(spans: list[Span]) -> list[int]:
    """Sentence ids at which a new span starts (the first span excluded)."""
    return [s.first_sentence for s in spans[1:]]


# -- crosstabs ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ContingencyTable:
    key: str
    position: int | None
    rows: tuple
    columns: tuple
    counts: np.ndarray
    n_pairs: np.ndarray

    @property
    def percentages(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = 100.0 * self.counts / totals
        return np.where(totals > 0, pct, 0.0)

    @property
    def pair_percentages(self) -> np.ndarray:
        """Counts relative to the number of transitions in each cluster."""
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = 100.0 * self.counts / self.n_pairs[:, None]
        return np.where(self.n_pairs[:, None] > 0, pct, 0.0)

    def cell(self, row, column, pairs=False) -> float:
        table = self.pair_percentages if pairs else self.percentages
        return float(table[self.rows.index(row), self.columns.index(column)])

    def to_csv(self) -> str:
        cols = [_fmt_value(c) for c in self.columns]
        lines = ["cluster,n_pairs,n_verbs," + ",".join(f"count_{c}" for c in cols)
                 + "," + ",".join(f"pct_{c}" for c in cols)
                 + "," + ",".join(f"pairpct_{c}" for c in cols)]
        pct, ppct = self.percentages, self.pair_percentages
        for i, row in enumerate(self.rows):
            cells = [str(row), str(int(self.n_pairs[i])), str(int(self.counts[i].sum()))]
            cells += [str(int(v)) for v in self.counts[i]]
            cells += [f"{v:.4f}" for v in pct[i]]
            cells += [f"{v:.4f}" for v in ppct[i]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def format(self) -> str:
        label = self.key if self.position is None else f"{self.key} (verb {self.position})"
        head = f"{'cluster':<9}{'n':>6}" + "".join(f"{_fmt_value(c):>8}" for c in self.columns)
        out = [f"crosstab: {label} (row percent of verb occurrences)", head]
        for i, row in enumerate(self.rows):
            out.append(f"{str(row):<9}{int(self.counts[i].sum()):>6}"
                       + "".join(f"{v:>8.1f}" for v in self.percentages[i]))
        return "\n".join(out) + "\n"


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    return str(value)


def _row_order(clusters):
    ints = sorted(c for c in clusters if c != NONE_CLUSTER)
    return tuple(ints + ([NONE_CLUSTER] if NONE_CLUSTER in clusters else []))


def crosstab(transitions: list[LabeledTransition], key: str,
             position: int | None = None) -> ContingencyTable:
    """Clusters by annotation values over the verbs of each transition.

    ``position=None`` pools both verbs of every window; ``1`` or ``2``
    restricts the count to the first or second verb.
    """
    if not transitions:
        raise EmptyInput("no labeled transitions")
    if key not in ANNOTATION_VALUES:
        raise ValueError(f"unknown annotation key {key!r}")
    if position not in (None, 1, 2):
        raise ValueError("position must be None, 1 or 2")
    columns = ANNOTATION_VALUES[key]
    col_index = {v: j for j, v in enumerate(columns)}
    rows = _row_order({t.cluster for t in transitions})
    row_index = {r: i for i, r in enumerate(rows)}
    counts = np.zeros((len(rows), len(columns)), dtype=int)
    n_pairs = np.zeros(len(rows), dtype=int)
    for t in transitions:
        i = row_index[t.cluster]
        n_pairs[i] += 1
        verbs = t.tokens if position is None else (t.tokens[position - 1],)
        for tok in verbs:
            counts[i, col_index[getattr(tok, key)]] += 1
    return ContingencyTable(key, position, rows, columns, counts, n_pairs)


# -- association -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AssociationResult:
    statistic: float
    dof: int
    p_value: float
    low_expected_cells: int = 0
    dropped_rows: list = field(default_factory=list)
    dropped_columns: list = field(default_factory=list)
    warning: str | None = None


def association_test(table) -> AssociationResult:
    """Pearson chi-square test of independence.

    All-zero rows/columns are dropped and listed in the result.  The p-value
    is the regularized upper incomplete gamma ``Q(dof/2, stat/2)``.
    """
    counts = np.asarray(getattr(table, "counts", table), dtype=float)
    row_labels = list(getattr(table, "rows", range(counts.shape[0])))
    col_labels = list(getattr(table, "columns", range(counts.shape[1])))
    if counts.ndim != 2:
        raise DegenerateTable("expected a two-dimensional table")
    keep_r = counts.sum(axis=1) > 0
    keep_c = counts.sum(axis=0) > 0
    dropped_r = [r for r, k in zip(row_labels, keep_r) if not k]
    dropped_c = [c for c, k in zip(col_labels, keep_c) if not k]
    obs = counts[keep_r][:, keep_c]
    if obs.shape[0] < 2 or obs.shape[1] < 2:
        raise DegenerateTable(
            f"table is {obs.shape[0]}x{obs.shape[1]} after dropping empty rows/columns")
    expected = obs.sum(axis=1, keepdims=True) * obs.sum(axis=0, keepdims=True) / obs.sum()
    stat = float(((obs - expected) ** 2 / expected).sum())
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    p = float(special.gammaincc(dof / 2.0, stat / 2.0))
    low = int((expected < 5).sum())
    notes = []
    if low:
        notes.append(f"{low} cell(s) with expected count < 5")
    if dropped_r or dropped_c:
        notes.append(f"dropped empty rows {dropped_r} and columns {dropped_c}")
    return AssociationResult(stat, dof, p, low, dropped_r, dropped_c,
                             "; ".join(notes) or None)


# -- typical pairs -----------------------------------------------------------

@dataclass(frozen=True)
class TypicalPair:
    cluster: int
    unit: int
    pattern: tuple[tuple[str, str], tuple[str, str]]
    support: int
    transition_prob: float
    score: float

    def to_dict(self) -> dict:
        (c1, t1), (c2, t2) = self.pattern
        return {"cluster": self.cluster, "unit": self.unit,
                "verb1": {"category": c1, "tense": t1},
                "verb2": {"category": c2, "tense": t2},
                "support": self.support, "transition_prob": self.transition_prob,
                "score": self.score}


def typical_pairs(som: SomMap, clustering: UnitClustering, hits, transitions,
                  min_support: int = 1, top_n: int = 3) -> dict[int, list[TypicalPair]]:
    """Rank decoded unit prototypes within each cluster.

    score = (unit's share of the cluster's hits) x (1 + strongest empirical
    transition probability into or out of the unit).  Units sharing a
    decoded pattern are collapsed to the best-scoring one.
    """
    hits = np.asarray(hits)
    P = np.asarray(transitions, dtype=float)
    if P.shape != (som.n_units, som.n_units):
        raise ValueError("transition matrix does not match the map size")
    labels = clustering.unit_labels
    result: dict[int, list[TypicalPair]] = {}
    for c in range(clustering.k):
        units = np.flatnonzero(labels == c)
        mass = hits[units].sum()
        ranked = []
        for u in units:
            if hits[u] < max(min_support, 1):
                continue
            tp = float(max(P[u].max(), P[:, u].max()))
            score = float(hits[u] / mass) * (1.0 + tp)
            pattern = decode_prototype(som, int(u)).argmax_pair()
            ranked.append(TypicalPair(c, int(u), pattern, int(hits[u]), tp, score))
        ranked.sort(key=lambda p: (-p.score, p.unit))
        seen, kept = set(), []
        for p in ranked:
            if p.pattern not in seen:
                seen.add(p.pattern)
                kept.append(p)
        result[c] = kept[:top_n]
    return result


def format_pattern(pattern) -> str:
    (c1, t1), (c2, t2) = pattern
    return f"({c1}, {t1}) -> ({c2}, {t2})"
