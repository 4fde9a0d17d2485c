"""Symbolic measures on the word space and their axis projections."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, ParafracError

MASS_TOL = 1e-12
TABLE_TOL = 1e-10


class UnsupportedMeasureError(ParafracError):
    """Operation not available for this measure kind."""


def _as_word_matrix(words) -> np.ndarray:
    arr = np.asarray(words, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


@dataclass(frozen=True)
class BernoulliMeasure:
    """Product measure with i.i.d. symbol weights."""

    weights: tuple[float, ...]
    c: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ConfigError("weights must be a non-empty vector")
        if np.any(w <= 0):
            raise ConfigError("Bernoulli weights must be strictly positive")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ConfigError(f"Bernoulli weights sum to {w.sum():.15g}, not 1")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    kind = "bernoulli"

    @classmethod
    def uniform(cls, k: int) -> "BernoulliMeasure":
        return cls(tuple([1.0 / k] * k))

    @property
    def n_symbols(self) -> int:
        return len(self.weights)

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(np.asarray(self.weights))

    def mass(self, word: Sequence[int]) -> float:
        return float(np.prod([self.weights[j] for j in word])) if len(word) else 1.0

    def log_mass_many(self, words) -> np.ndarray:
        arr = _as_word_matrix(words)
        if arr.shape[1] == 0:
            return np.zeros(arr.shape[0])
        return self.log_weights[arr].sum(axis=1)

    def to_dict(self) -> dict:
        d = {"bernoulli": list(self.weights)}
        if self.c is not None:
            d["c"] = self.c
        return d


@dataclass(frozen=True)
class TableMeasure:
    """Cylinder masses tabulated for every word up to ``depth``.

    ``levels[d]`` is a flat array of length ``K**d`` indexed by the base-K
    code of the word.  Beyond the tabulated depth, masses are extended by
    multiplying the depth-``depth`` prefix mass with Bernoulli weights taken
    from the depth-1 row; this extension is an approximation.
    """

    n_symbols: int
    levels: tuple[np.ndarray, ...]
    c: float | None = None
    source: str | None = field(default=None, compare=False)

    kind = "table"

    def __post_init__(self):
        k = self.n_symbols
        if k < 1 or len(self.levels) < 2:
            raise ConfigError("table needs at least the depth-1 row")
        if abs(self.levels[0][0] - 1.0) > TABLE_TOL:
            raise ConfigError("mass of the empty word must be 1")
        for d in range(1, len(self.levels)):
            row = self.levels[d]
            if row.shape != (k ** d,):
                raise ConfigError(f"table row {d} has {row.size} entries, expected {k ** d}")
            if np.any(row <= 0):
                raise ConfigError(f"table row {d} has non-positive masses")
            parent = row.reshape(-1, k).sum(axis=1)
            if np.max(np.abs(parent - self.levels[d - 1])) > TABLE_TOL:
                raise ConfigError(f"table row {d} is not additive over one-symbol extensions")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def fitted_weights(self) -> np.ndarray:
        return np.asarray(self.levels[1], dtype=float)

    @classmethod
    def from_function(cls, k: int, depth: int, fn, c: float | None = None) -> "TableMeasure":
        """Tabulate ``fn(word)`` for all words up to ``depth``."""
        levels = [np.array([1.0])]
        for d in range(1, depth + 1):
            levels.append(np.array([fn(w) for w in itertools.product(range(k), repeat=d)], dtype=float))
        return cls(k, tuple(levels), c)

    @classmethod
    def from_csv(cls, path: str | Path, k: int, c: float | None = None) -> "TableMeasure":
        """Read ``word,mass`` rows; words are digit strings or dot-separated ids."""
        rows: dict[tuple[int, ...], float] = {}
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].strip().lower() == "word":
                    continue
                text = rec[0].strip()
                if text in ("", "e", "eps"):
                    word: tuple[int, ...] = ()
                elif "." in text:
                    word = tuple(int(t) for t in text.split("."))
                else:
                    word = tuple(int(ch) for ch in text)
                if any(not 0 <= s < k for s in word):
                    raise ConfigError(f"table word {text!r} uses a symbol outside range({k})")
                rows[word] = float(rec[1])
        depth = max((len(w) for w in rows), default=0)
        levels = [np.array([1.0])]
        for d in range(1, depth + 1):
            row = np.empty(k ** d)
            for code, w in enumerate(itertools.product(range(k), repeat=d)):
                if w not in rows:
                    raise ConfigError(f"table is missing word {''.join(map(str, w))}")
                row[code] = rows[w]
            levels.append(row)
        return cls(k, tuple(levels), c, source=str(path))

    def _codes(self, arr: np.ndarray) -> np.ndarray:
        powers = self.n_symbols ** np.arange(arr.shape[1] - 1, -1, -1, dtype=np.int64)
        return arr @ powers

    def mass(self, word: Sequence[int]) -> float:
        return float(np.exp(self.log_mass_many([tuple(word)])[0])) if len(word) else 1.0

    def log_mass_many(self, words) -> np.ndarray:
        arr = _as_word_matrix(words)
        n = arr.shape[1]
        if n == 0:
            return np.zeros(arr.shape[0])
        d = min(n, self.depth)
        head = np.log(self.levels[d][self._codes(arr[:, :d])])
        if n > d:
            head = head + np.log(self.fitted_weights)[arr[:, d:]].sum(axis=1)
        return head

    def to_dict(self) -> dict:
        d = {"table": self.source}
        if self.c is not None:
            d["c"] = self.c
        return d


SymbolicMeasure = BernoulliMeasure | TableMeasure


def cylinder_mass(measure: SymbolicMeasure, word: Sequence[int]) -> float:
    return measure.mass(word)


@dataclass(frozen=True)
class ProjectedMeasure:
    """Bernoulli measure on the distinct maps of one carpet coordinate."""

    axis: str
    ids: tuple[int, ...]
    weights: tuple[float, ...]
    system: object
    measure: BernoulliMeasure


def project(system, measure: SymbolicMeasure, axis: str) -> ProjectedMeasure:
    """Push a Bernoulli carpet measure onto one axis.

    Symbols sharing a grid id are merged and their weights summed; the
    merged alphabet lists the used ids in increasing order.
    """
    from .system import CantorSystem

    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    if not isinstance(measure, BernoulliMeasure):
        raise UnsupportedMeasureError("projection is only available for Bernoulli measures")
    coord = 0 if axis == "x" else 1
    ids = np.array([cell[coord] for cell in system.grid])
    family = system.columns if axis == "x" else system.rows
    used = tuple(int(v) for v in np.unique(ids))
    w = np.asarray(measure.weights)
    merged = [float(w[ids == u].sum()) for u in used]
    # renormalise away rounding so the Bernoulli invariant holds
    total = sum(merged)
    merged = [m / total for m in merged]
    cantor = CantorSystem(tuple(family[u] for u in used), name=f"{system.name}:{axis}")
    return ProjectedMeasure(axis, used, tuple(merged), cantor, BernoulliMeasure(tuple(merged)))


@dataclass
class AuditReport:
    max_ratio: float
    max_inverse_ratio: float
    pairs_checked: int
    offending: list[tuple[tuple[int, ...], tuple[int, ...], float]]
    declared_c: float | None

    @property
    def passed(self) -> bool:
        return not self.offending


def quasi_bernoulli_audit(measure: SymbolicMeasure, induced=None, sample_pairs: int = 200,
                          seed: int = 0, max_len: int | None = None) -> AuditReport:
    """Sample word pairs and report extreme values of ``P[ij] / (P[i] P[j])``.

    With ``induced`` (an :class:`~parafrac.symbolic.InducedAlphabet`) the
    words are concatenations of induced entries.  Pairs whose ratio leaves
    ``[1/c, c]`` are listed when the measure declares ``c``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    k = measure.n_symbols
    if max_len is None:
        max_len = max(measure.depth // 2, 1) if isinstance(measure, TableMeasure) else 4

    def draw():
        if induced is None:
            n = int(rng.integers(1, max_len + 1))
            return tuple(int(s) for s in rng.integers(0, k, size=n))
        n = int(rng.integers(1, 3))
        entries = induced.entries
        out: tuple[int, ...] = ()
        for _ in range(n):
            out += entries[int(rng.integers(0, len(entries)))]
        return out

    hi, lo = 0.0, 0.0
    offending = []
    for _ in range(sample_pairs):
        i, j = draw(), draw()
        r = measure.mass(i + j) / (measure.mass(i) * measure.mass(j))
        hi = max(hi, r)
        lo = max(lo, 1.0 / r)
        c = measure.c
        if c is not None and (r > c * (1 + 1e-12) or r < 1 / c * (1 - 1e-12)):
            offending.append((i, j, r))
    return AuditReport(hi, lo, sample_pairs, offending, measure.c)
