"""Sequence dynamics over the SOM codebook.

Sentences become sequences of BMU indices (one symbol per transition window).
On top of those symbols this module estimates first-order empirical
transition matrices and discrete-emission HMMs (Baum-Welch with scaled
forward-backward, log-domain Viterbi).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import VerbSequence, sample_matrix, window_transitions
from .errors import InvalidK, SymbolOutOfRange
from .som import SomMap, best_matching_units

LOG_ZERO = -math.inf


@dataclass(frozen=True)
class SymbolSequence:
    symbols: tuple[int, ...]
    source: tuple[str, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if not self.symbols:
            raise ValueError("a symbol sequence needs at least one symbol")

    def __len__(self):
        return len(self.symbols)


def _symbols(seq) -> np.ndarray:
    return np.asarray(seq.symbols if isinstance(seq, SymbolSequence) else seq, dtype=int)


def _check_symbols(obs: np.ndarray, M: int) -> None:
    if obs.size and (obs.min() < 0 or obs.max() >= M):
        bad = obs[(obs < 0) | (obs >= M)][0]
        raise SymbolOutOfRange(f"symbol {bad} outside alphabet [0, {M})")


def _stochastic(x, name: str, atol: float = 1e-9) -> np.ndarray:
    x = np.array(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite and non-negative")
    if not np.allclose(x.sum(axis=-1), 1.0, atol=atol, rtol=0):
        raise ValueError(f"{name} rows must sum to 1")
    x.flags.writeable = False
    return x


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Discrete HMM with ``K`` hidden states over an alphabet of ``M`` symbols."""

    pi: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        pi = _stochastic(self.pi, "pi")
        A = _stochastic(self.A, "A")
        B = _stochastic(self.B, "B")
        K = len(pi)
        if A.shape != (K, K) or B.ndim != 2 or B.shape[0] != K:
            raise ValueError(f"inconsistent shapes pi{pi.shape} A{A.shape} B{B.shape}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def K(self) -> int:
        return len(self.pi)

    @property
    def M(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class HmmFit:
    model: HmmModel
    loglik_trace: list[float] = field(default_factory=list)
    seed: int | None = None

    def to_dict(self) -> dict:
        m = self.model
        return {"K": m.K, "M": m.M, "pi": m.pi.tolist(), "A": m.A.tolist(),
                "B": m.B.tolist(), "seed": self.seed, "loglik_trace": list(self.loglik_trace)}

    @classmethod
    def from_dict(cls, data: dict) -> "HmmFit":
        model = HmmModel(data["pi"], data["A"], data["B"])
        if model.K != data["K"] or model.M != data["M"]:
            raise ValueError("K/M disagree with matrix shapes")
        return cls(model, [float(v) for v in data["loglik_trace"]], data.get("seed"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "HmmFit":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def empirical_transitions(sequences, M: int, alpha: float = 1.0) -> np.ndarray:
    """Add-``alpha`` smoothed first-order transition matrix between symbols.

    A row with no outgoing transitions and ``alpha == 0`` is uniform.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    counts = np.zeros((M, M))
    for seq in sequences:
        obs = _symbols(seq)
        _check_symbols(obs, M)
        np.add.at(counts, (obs[:-1], obs[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True) + alpha * M
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = (counts + alpha) / totals
    probs[totals[:, 0] == 0] = 1.0 / M
    return probs


# -- forward / backward ------------------------------------------------------

def _forward(model: HmmModel, obs: np.ndarray):
    """Scaled forward pass. Returns ``(alpha_hat, scales)``; a zero scale
    means the observation is impossible and the pass stops there."""
    T = len(obs)
    alpha = np.zeros((T, model.K))
    scales = np.zeros(T)
    a = model.pi * model.B[:, obs[0]]
    for t in range(T):
        if t:
            a = (alpha[t - 1] @ model.A) * model.B[:, obs[t]]
        c = a.sum()
        scales[t] = c
        if c == 0:
            return alpha, scales
        alpha[t] = a / c
    return alpha, scales


def _backward(model: HmmModel, obs: np.ndarray, scales: np.ndarray) -> np.ndarray:
    T = len(obs)
    beta = np.ones((T, model.K))
    for t in range(T - 2, -1, -1):
        beta[t] = model.A @ (model.B[:, obs[t + 1]] * beta[t + 1]) / scales[t + 1]
    return beta


def _loglik(scales: np.ndarray) -> float:
    if np.any(scales == 0):
        return LOG_ZERO
    return float(np.log(scales).sum())


def forward_log_likelihood(model: HmmModel, sequence) -> float:
    """``log P(sequence | model)``; ``-inf`` for an impossible sequence."""
    obs = _symbols(sequence)
    _check_symbols(obs, model.M)
    if obs.size == 0:
        return 0.0
    _, scales = _forward(model, obs)
    return _loglik(scales)


def viterbi(model: HmmModel, sequence) -> tuple[list[int], float]:
    """Most probable state path and its log probability.

    Among equally probable predecessors/final states the lowest index wins.
    """
    obs = _symbols(sequence)
    _check_symbols(obs, model.M)
    with np.errstate(divide="ignore"):
        log_pi, log_A, log_B = np.log(model.pi), np.log(model.A), np.log(model.B)
    T = len(obs)
    delta = log_pi + log_B[:, obs[0]]
    back = np.zeros((T, model.K), dtype=int)
    for t in range(1, T):
        cand = delta[:, None] + log_A
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(model.K)] + log_B[:, obs[t]]
    state = int(np.argmax(delta))
    best = float(delta[state])
    path = [state]
    for t in range(T - 1, 0, -1):
        state = int(back[t, state])
        path.append(state)
    return path[::-1], best


# -- Baum-Welch --------------------------------------------------------------

def _random_model(K: int, M: int, rng: np.random.Generator) -> HmmModel:
    return HmmModel(rng.dirichlet(np.ones(K)),
                    rng.dirichlet(np.ones(K), size=K),
                    rng.dirichlet(np.ones(M), size=K))


def _e_step(model: HmmModel, observations: list[np.ndarray]):
    K, M = model.K, model.M
    pi_acc = np.zeros(K)
    trans_num = np.zeros((K, K))
    trans_den = np.zeros(K)
    emit_num = np.zeros((K, M))
    emit_den = np.zeros(K)
    total = 0.0
    for obs in observations:
        alpha, scales = _forward(model, obs)
        ll = _loglik(scales)
        if ll == LOG_ZERO:
            return LOG_ZERO, None
        total += ll
        beta = _backward(model, obs, scales)
        gamma = alpha * beta
        pi_acc += gamma[0]
        np.add.at(emit_num.T, obs, gamma)
        emit_den += gamma.sum(axis=0)
        if len(obs) > 1:
            # xi[t, i, j] = alpha[t, i] A[i, j] B[j, o_{t+1}] beta[t+1, j] / c_{t+1}
            nxt = model.B[:, obs[1:]].T * beta[1:] / scales[1:, None]
            xi = alpha[:-1, :, None] * model.A[None, :, :] * nxt[:, None, :]
            trans_num += xi.sum(axis=0)
            trans_den += gamma[:-1].sum(axis=0)
    return total, (pi_acc, trans_num, trans_den, emit_num, emit_den)


def _m_step(model: HmmModel, stats, n_sequences: int) -> HmmModel:
    pi_acc, trans_num, trans_den, emit_num, emit_den = stats
    pi = pi_acc / n_sequences
    A = np.array(model.A)
    B = np.array(model.B)
    # states with no expected visits keep their previous rows
    rows = trans_den > 0
    A[rows] = trans_num[rows] / trans_den[rows, None]
    rows = emit_den > 0
    B[rows] = emit_num[rows] / emit_den[rows, None]
    # rescale away rounding drift so rows stay stochastic to ~1e-15
    return HmmModel(pi / pi.sum(), A / A.sum(axis=1, keepdims=True),
                    B / B.sum(axis=1, keepdims=True))


def baum_welch(sequences: Sequence, K: int, M: int, seed: int = 0,
               max_iter: int = 100, tol: float = 1e-6) -> tuple[HmmModel, list[float]]:
    """EM fit of a discrete HMM from a seeded random stochastic start.

    ``trace[i]`` is the total log-likelihood after ``i`` updates, so the
    returned model's log-likelihood is ``trace[-1]``.  Iteration stops when
    an update improves the log-likelihood by less than ``tol``.
    """
    if K < 1:
        raise InvalidK(f"K must be >= 1, got {K}")
    observations = [_symbols(s) for s in sequences]
    observations = [o for o in observations if o.size]
    if not observations:
        raise ValueError("need at least one non-empty sequence")
    for obs in observations:
        _check_symbols(obs, M)

    rng = np.random.default_rng(seed)
    model = _random_model(K, M, rng)
    ll, stats = _e_step(model, observations)
    trace = [ll]
    for _ in range(max_iter):
        model = _m_step(model, stats, len(observations))
        ll, stats = _e_step(model, observations)
        trace.append(ll)
        if ll - trace[-2] < tol:
            break
    return model, trace


def bmu_sequences(sequences: Sequence[VerbSequence], som: SomMap) -> list[SymbolSequence]:
    """Map each verb sequence to the BMU indices of its transition windows."""
    out = []
    for seq in sequences:
        units, _ = best_matching_units(som, sample_matrix(window_transitions(seq)))
        out.append(SymbolSequence(tuple(int(u) for u in units), (seq.text_id, seq.sent_id)))
    return out
