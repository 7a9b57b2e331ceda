"""Run configuration: flat ``key = value`` text with ``#`` comments.

Every randomized component draws from its own named substream of the run
seed, so the SOM, the HMM start and the generator can be re-run on their
own and still match a full run.
"""

from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def substream_seed(seed: int, name: str) -> int:
    """Deterministic 32-bit seed for the component *name* of run *seed*."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class RunConfig:
    corpus: str = ""
    out: str = "out"
    seed: int = 0
    # SOM
    som_rows: int = 8
    som_cols: int = 8
    som_epochs: int = 50
    som_initial_radius: float = 4.0
    som_final_radius: float = 0.5
    replication: int = 1
    # clustering; k = 0 selects k by Davies-Bouldin over [k_min, k_max]
    k: int = 0
    k_min: int = 2
    k_max: int = 8
    cluster_empty_units: bool = True
    # dynamics
    hmm_states: int = 4
    hmm_max_iter: int = 100
    hmm_tol: float = 1e-6
    alpha: float = 1.0
    # report
    top_n: int = 3
    min_support: int = 1

    def __post_init__(self):
        checks = [
            (self.som_rows >= 1 and self.som_cols >= 1, "som_rows and som_cols must be >= 1"),
            (self.som_epochs >= 0, "som_epochs must be >= 0"),
            (self.som_initial_radius >= 0 and self.som_final_radius >= 0, "radii must be >= 0"),
            (self.replication >= 1, "replication must be >= 1"),
            (self.k == 0 or self.k >= 2, "k must be 0 (select) or >= 2"),
            (2 <= self.k_min <= self.k_max, "need 2 <= k_min <= k_max"),
            (self.hmm_states >= 1, "hmm_states must be >= 1"),
            (self.hmm_max_iter >= 0, "hmm_max_iter must be >= 0"),
            (self.hmm_tol >= 0, "hmm_tol must be >= 0"),
            (self.alpha >= 0, "alpha must be >= 0"),
            (self.top_n >= 1 and self.min_support >= 1, "top_n and min_support must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def seed_for(self, name: str) -> int:
        return substream_seed(self.seed, name)

    def dumps(self) -> str:
        """Serialize every field except ``out`` (implied by where the file lives)."""
        lines = ["# verbseq run configuration"]
        for f in dataclasses.fields(self):
            if f.name == "out":
                continue
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep:
                raise ConfigError(f"line {lineno}: expected key = value")
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _parse(types[key], value, lineno)
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _parse(kind: str, value: str, lineno: int):
    try:
        if kind == "bool":
            if value.lower() not in ("true", "false", "1", "0"):
                raise ValueError(value)
            return value.lower() in ("true", "1")
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"line {lineno}: bad {kind} value {value!r}") from None
