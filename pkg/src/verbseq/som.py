"""Batch self-organizing map over 26-dimensional transition vectors.

Units live on a rectangular ``rows x cols`` grid and are indexed row-major.
Grid distance is the Chebyshev distance between unit coordinates and the
neighborhood kernel is ``exp(-g**2 / (2 r**2))``; a radius of exactly zero
degenerates to the indicator ``g == 0`` (plain batch k-means).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import CATEGORIES, PAIR_DIM, TENSES, VERB_DIM, sample_matrix
from .errors import DimensionMismatch, EmptySamples, IndexOutOfRange

# Units whose neighborhood weight mass falls below this keep their prototype.
MIN_WEIGHT_MASS = 1e-12


@dataclass(frozen=True)
class SomSchedule:
    epochs: int = 50
    initial_radius: float = 4.0
    final_radius: float = 0.5
    seed: int = 0

    def radius(self, epoch: int) -> float:
        """Linearly interpolated radius for ``epoch`` in ``[0, epochs)``."""
        if self.epochs <= 1:
            return float(self.final_radius)
        frac = epoch / (self.epochs - 1)
        return float(self.initial_radius + (self.final_radius - self.initial_radius) * frac)


@dataclass(frozen=True, eq=False)
class SomMap:
    rows: int
    cols: int
    prototypes: np.ndarray
    schedule: SomSchedule

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be >= 1")
        protos = np.array(self.prototypes, dtype=float)
        if protos.shape != (self.rows * self.cols, protos.shape[-1]) or protos.ndim != 2:
            raise ValueError(
                f"expected {self.rows * self.cols} prototypes, got array of shape {protos.shape}")
        if not np.all(np.isfinite(protos)):
            raise ValueError("prototypes must be finite")
        protos.flags.writeable = False
        object.__setattr__(self, "prototypes", protos)

    @property
    def n_units(self) -> int:
        return self.rows * self.cols

    @property
    def input_dim(self) -> int:
        return self.prototypes.shape[1]

    def coordinates(self) -> np.ndarray:
        return grid_coordinates(self.rows, self.cols)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "input_dim": self.input_dim,
            "seed": self.schedule.seed,
            "schedule": {
                "epochs": self.schedule.epochs,
                "initial_radius": self.schedule.initial_radius,
                "final_radius": self.schedule.final_radius,
            },
            "prototypes": self.prototypes.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SomMap":
        sched = data["schedule"]
        schedule = SomSchedule(int(sched["epochs"]), float(sched["initial_radius"]),
                               float(sched["final_radius"]), int(data["seed"]))
        protos = np.asarray(data["prototypes"], dtype=float)
        if protos.shape[1] != int(data["input_dim"]):
            raise DimensionMismatch("prototype width disagrees with input_dim")
        return cls(int(data["rows"]), int(data["cols"]), protos, schedule)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SomMap":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def grid_coordinates(rows: int, cols: int) -> np.ndarray:
    r, c = np.divmod(np.arange(rows * cols), cols)
    return np.column_stack([r, c])


def grid_distances(rows: int, cols: int) -> np.ndarray:
    """Chebyshev distance between every pair of units."""
    xy = grid_coordinates(rows, cols)
    return np.abs(xy[:, None, :] - xy[None, :, :]).max(axis=2).astype(float)


def neighborhood(grid_dist: np.ndarray, radius: float) -> np.ndarray:
    if radius <= 0 or radius * radius == 0.0:  # second test catches underflow
        return (grid_dist == 0).astype(float)
    return np.exp(-grid_dist ** 2 / (2.0 * radius ** 2))


def _data(samples, dim=PAIR_DIM) -> np.ndarray:
    x = sample_matrix(samples)
    if x.shape[0] == 0:
        raise EmptySamples("need at least one sample")
    if x.shape[1] != dim:
        raise DimensionMismatch(f"samples have dimension {x.shape[1]}, expected {dim}")
    return x


def _bmus(prototypes: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # squared distances via broadcasting keep exact zeros for exact matches
    d2 = ((x[:, None, :] - prototypes[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, np.sqrt(d2[np.arange(len(x)), idx])


def batch_epoch(prototypes: np.ndarray, x: np.ndarray, grid_dist: np.ndarray,
                radius: float) -> np.ndarray:
    """One batch update: assign BMUs, then neighborhood-weighted means."""
    idx, _ = _bmus(prototypes, x)
    h = neighborhood(grid_dist, radius)
    weights = h[:, idx]  # units x samples
    mass = weights.sum(axis=1)
    updated = prototypes.copy()
    live = mass >= MIN_WEIGHT_MASS
    updated[live] = (weights[live] @ x) / mass[live, None]
    return updated


def train_som(samples, rows: int = 8, cols: int = 8, epochs: int = 50,
              initial_radius: float = 4.0, final_radius: float = 0.5,
              seed: int = 0) -> SomMap:
    """Fit a batch SOM; prototypes start as data points drawn with the seed."""
    x = _data(samples)
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    schedule = SomSchedule(epochs, float(initial_radius), float(final_radius), int(seed))
    rng = np.random.default_rng(seed)
    protos = x[rng.integers(0, len(x), size=rows * cols)].copy()
    grid_dist = grid_distances(rows, cols)
    for epoch in range(epochs):
        protos = batch_epoch(protos, x, grid_dist, schedule.radius(epoch))
    return SomMap(rows, cols, protos, schedule)


def initial_map(samples, rows: int = 8, cols: int = 8, seed: int = 0) -> SomMap:
    """The untrained map ``train_som`` would start from."""
    return train_som(samples, rows, cols, epochs=0, seed=seed)


def continue_training(som: SomMap, samples, epochs: int, radius: float) -> SomMap:
    """Run extra batch epochs at a fixed radius."""
    x = _data(samples, som.input_dim)
    protos = np.array(som.prototypes)
    grid_dist = grid_distances(som.rows, som.cols)
    for _ in range(epochs):
        protos = batch_epoch(protos, x, grid_dist, radius)
    return SomMap(som.rows, som.cols, protos, som.schedule)


def best_matching_unit(som: SomMap, sample) -> tuple[int, float]:
    """Nearest prototype by Euclidean distance; ties go to the lower index."""
    v = np.asarray(getattr(sample, "vector", sample), dtype=float)
    if v.shape != (som.input_dim,):
        raise DimensionMismatch(f"sample has shape {v.shape}, expected ({som.input_dim},)")
    idx, dist = _bmus(som.prototypes, v[None, :])
    return int(idx[0]), float(dist[0])


def best_matching_units(som: SomMap, samples) -> tuple[np.ndarray, np.ndarray]:
    x = sample_matrix(samples)
    if x.shape[0] == 0:
        return np.zeros(0, dtype=int), np.zeros(0)
    if x.shape[1] != som.input_dim:
        raise DimensionMismatch(f"samples have dimension {x.shape[1]}, expected {som.input_dim}")
    return _bmus(som.prototypes, x)


def quantization_error(som: SomMap, samples) -> float:
    x = _data(samples, som.input_dim)
    _, dist = _bmus(som.prototypes, x)
    return float(dist.mean())


def hit_histogram(som: SomMap, samples) -> np.ndarray:
    idx, _ = best_matching_units(som, samples)
    return np.bincount(idx, minlength=som.n_units)


@dataclass(frozen=True, eq=False)
class DecodedPrototype:
    first_category: np.ndarray
    first_tense: np.ndarray
    second_category: np.ndarray
    second_tense: np.ndarray

    def blocks(self):
        return (self.first_category, self.first_tense, self.second_category, self.second_tense)

    def argmax_pair(self) -> tuple[tuple[str, str], tuple[str, str]]:
        return ((CATEGORIES[int(np.argmax(self.first_category))],
                 TENSES[int(np.argmax(self.first_tense))]),
                (CATEGORIES[int(np.argmax(self.second_category))],
                 TENSES[int(np.argmax(self.second_tense))]))


def _normalize_block(block: np.ndarray) -> np.ndarray:
    block = np.clip(block, 0.0, None)
    total = block.sum()
    if total <= 0:
        return np.full(len(block), 1.0 / len(block))
    return block / total


def decode_prototype(som: SomMap, unit: int) -> DecodedPrototype:
    if not 0 <= unit < som.n_units:
        raise IndexOutOfRange(f"unit {unit} outside [0, {som.n_units})")
    p = som.prototypes[unit]
    nc = len(CATEGORIES)
    return DecodedPrototype(
        _normalize_block(p[:nc]),
        _normalize_block(p[nc:VERB_DIM]),
        _normalize_block(p[VERB_DIM:VERB_DIM + nc]),
        _normalize_block(p[VERB_DIM + nc:]),
    )
