"""Cluster SOM prototypes and pick the cluster count by Davies-Bouldin.

Clustering runs PAM (k-medoids) on the Euclidean distance matrix of the
map prototypes.  Units with zero hits never carry a label (``-1``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidK, SingletonPartition, TooFewVectors

# Minimum cost decrease for a SWAP to count as an improvement.
_SWAP_EPS = 1e-12


def distance_matrix(vectors) -> np.ndarray:
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or len(x) < 2:
        raise TooFewVectors("need at least two vectors")
    n = len(x)
    d = np.zeros((n, n))
    for i in range(n - 1):
        d[i, i + 1:] = np.sqrt(((x[i + 1:] - x[i]) ** 2).sum(axis=1))
    return d + d.T


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    k: int
    labels: np.ndarray
    medoids: tuple[int, ...]
    cost: float

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster)


def _cost(dist: np.ndarray, medoids) -> float:
    return float(dist[:, list(medoids)].min(axis=1).sum())


def _build(dist: np.ndarray, k: int, first: int | None = None) -> list[int]:
    """Greedy BUILD; ``first`` overrides the classic most-central first medoid."""
    n = len(dist)
    if first is None:
        first = int(np.argmin(dist.sum(axis=1)))
    medoids = [first]
    nearest = dist[:, first].copy()
    for _ in range(1, k):
        # total cost if candidate c joined the medoid set, for every c
        totals = np.minimum(nearest[:, None], dist).sum(axis=0)
        totals[medoids] = np.inf
        best = int(np.argmin(totals))
        medoids.append(best)
        nearest = np.minimum(nearest, dist[:, best])
    assert len(set(medoids)) == k <= n
    return medoids


def _swap(dist: np.ndarray, medoids: list[int], max_iter: int = 1000):
    n = len(dist)
    cost = _cost(dist, medoids)
    trace = [cost]
    for _ in range(max_iter):
        best_cost, best_move = cost, None
        others = [o for o in range(n) if o not in medoids]
        for mi in range(len(medoids)):
            rest = dist[:, medoids[:mi] + medoids[mi + 1:]]
            base = rest.min(axis=1) if rest.shape[1] else np.full(n, np.inf)
            cand = np.minimum(base[:, None], dist[:, others]).sum(axis=0)
            j = int(np.argmin(cand))
            if cand[j] < best_cost - _SWAP_EPS:
                best_cost, best_move = float(cand[j]), (mi, others[j])
        if best_move is None:
            break
        mi, o = best_move
        medoids = medoids[:mi] + [o] + medoids[mi + 1:]
        cost = _cost(dist, medoids)
        trace.append(cost)
    return medoids, trace


def cluster_prototypes(distances, k: int, *, restarts: bool = True,
                       return_trace: bool = False):
    """PAM k-medoids: greedy BUILD, then best-improvement SWAP to a local optimum.

    With ``restarts`` the BUILD/SWAP pair is also run with every point forced
    as the first medoid and the cheapest local optimum is kept (the classic
    start wins ties).  A single SWAP descent can stall well above the best
    medoid set on small inputs; the restarts remove most of that gap.

    Clusters are numbered by ascending medoid index and each point goes to
    its nearest medoid (ties to the lower medoid index).  ``trace`` is the
    SWAP cost trace of the winning start.
    """
    dist = np.asarray(distances, dtype=float)
    n = len(dist)
    if not 2 <= k <= n:
        raise InvalidK(f"k must satisfy 2 <= k <= {n}, got {k}")
    medoids, trace = _swap(dist, _build(dist, k))
    if restarts:
        for first in range(n):
            cand, cand_trace = _swap(dist, _build(dist, k, first))
            if cand_trace[-1] < trace[-1] - _SWAP_EPS:
                medoids, trace = cand, cand_trace
    medoids = sorted(medoids)
    labels = np.argmin(dist[:, medoids], axis=1)
    # a point coinciding with a later medoid must stay with its own medoid
    labels[medoids] = np.arange(k)
    result = ClusterAssignment(k, labels, tuple(medoids), _cost(dist, medoids))
    return (result, trace) if return_trace else result


@dataclass(frozen=True, eq=False)
class ClusterQuality:
    k: int
    dispersions: np.ndarray
    separations: np.ndarray
    ratios: np.ndarray
    db_score: float
    coincident: list[tuple[int, int]] = field(default_factory=list)


def davies_bouldin(vectors, assignment) -> ClusterQuality:
    """Davies-Bouldin index with mean-distance dispersion and Euclidean separation.

    Coincident centroids make the score ``inf`` and are listed in
    ``coincident`` rather than raised.
    """
    x = np.asarray(vectors, dtype=float)
    labels = np.asarray(getattr(assignment, "labels", assignment))
    clusters = np.unique(labels)
    k = len(clusters)
    if k < 2:
        raise SingletonPartition("Davies-Bouldin needs at least two clusters")
    centroids = np.array([x[labels == c].mean(axis=0) for c in clusters])
    disp = np.array([np.linalg.norm(x[labels == c] - centroids[i], axis=1).mean()
                     for i, c in enumerate(clusters)])
    sep = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=2)
    coincident = [(int(i), int(j)) for i, j in zip(*np.nonzero(sep == 0)) if i < j]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = (disp[:, None] + disp[None, :]) / sep
    ratios[sep == 0] = np.inf
    np.fill_diagonal(ratios, -np.inf)
    score = math.inf if coincident else float(ratios.max(axis=1).mean())
    np.fill_diagonal(ratios, np.nan)
    return ClusterQuality(k, disp, sep, ratios, score, coincident)


def select_k(vectors, k_min: int = 2, k_max: int = 8) -> tuple[int, dict[int, ClusterQuality]]:
    """Cluster for each k in ``[k_min, k_max]`` and keep the lowest DB score.

    Ties go to the smaller k.
    """
    x = np.asarray(vectors, dtype=float)
    n = len(x)
    if not 2 <= k_min <= k_max <= n - 1:
        raise InvalidK(f"need 2 <= k_min <= k_max <= {n - 1}, got {k_min}..{k_max}")
    dist = distance_matrix(x)
    scores = {}
    best = None
    for k in range(k_min, k_max + 1):
        q = davies_bouldin(x, cluster_prototypes(dist, k))
        scores[k] = q
        if best is None or q.db_score < scores[best].db_score:
            best = k
    return best, scores


@dataclass(frozen=True, eq=False)
class UnitClustering:
    """Cluster labels for every unit of a map; ``-1`` marks empty units."""

    k: int
    unit_labels: np.ndarray
    medoid_units: tuple[int, ...]
    db_score: float
    per_k_scores: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "labels": [None if lab < 0 else int(lab) for lab in self.unit_labels],
            "medoids": list(self.medoid_units),
            "db_score": self.db_score,
            "per_k_scores": {str(k): v for k, v in sorted(self.per_k_scores.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UnitClustering":
        labels = np.array([-1 if lab is None else lab for lab in data["labels"]], dtype=int)
        return cls(int(data["k"]), labels, tuple(data["medoids"]), float(data["db_score"]),
                   {int(k): float(v) for k, v in data["per_k_scores"].items()})

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "UnitClustering":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def cluster_units(prototypes, hits, k: int | None = None, k_min: int = 2,
                  k_max: int = 8, include_empty: bool = True) -> UnitClustering:
    """Cluster the units of a map (fixed ``k`` or DB-selected).

    With ``include_empty`` every prototype takes part in PAM and in the
    Davies-Bouldin selection, so the interpolating units of the map keep
    its regions apart; otherwise only units with hits are clustered.
    Either way units without hits are reported unlabeled (``-1``).
    """
    prototypes = np.asarray(prototypes, dtype=float)
    hits = np.asarray(hits)
    live = np.flatnonzero(hits > 0)
    fitted = np.arange(len(prototypes)) if include_empty else live
    vecs = prototypes[fitted]
    if k is None:
        k_max = min(k_max, len(fitted) - 1)
        k, qualities = select_k(vecs, k_min, k_max)
        per_k = {kk: q.db_score for kk, q in qualities.items()}
    else:
        per_k = {}
    assignment = cluster_prototypes(distance_matrix(vecs), k)
    quality = davies_bouldin(vecs, assignment)
    per_k.setdefault(k, quality.db_score)
    unit_labels = np.full(len(prototypes), -1, dtype=int)
    unit_labels[fitted] = assignment.labels
    unit_labels[hits <= 0] = -1
    return UnitClustering(k, unit_labels, tuple(int(fitted[m]) for m in assignment.medoids),
                          quality.db_score, per_k)
