"""Bulk enumeration of level-n cylinders.

Words are grown by prepending symbols: if ``pts`` and ``ders`` hold
``h_w`` and ``|h_w'|`` on a fixed grid, then ``h_j o h_w`` needs only one
evaluation of ``h_j`` at ``pts``.  The tree is expanded breadth-first until
a chunk limit is reached and depth-first beyond it, and each finished chunk
is reduced to a handful of per-word log quantities so the full level never
lives in memory as grid arrays.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .maps1d import value_and_deriv
from .measure import BernoulliMeasure, TableMeasure
from .symbolic import DEFAULT_BUDGET, induced_alphabet_size

BULK_GRID = 16
CHUNK = 1 << 15
TINY = 1e-300
PROXIES = ("sup", "inf", "length")


@dataclass
class LevelData:
    """Per-word log quantities for one level of the word tree.

    ``log_sup[c]``, ``log_inf[c]`` and ``log_len[c]`` are the logs of the
    sampled sup and inf of ``|h_w'|`` and of the image length in coordinate
    ``c``.  For carpets ``log_o2``/``log_u1`` hold ``max_x min`` and
    ``min_x max`` of the two coordinate derivatives and ``is_x`` marks words
    whose rectangle is at least as wide as tall.  ``logw`` carries log
    multiplicities when words were aggregated by symbol counts.
    """

    level: int
    mode: str
    cutoff: int | None
    logm: np.ndarray
    log_sup: tuple[np.ndarray, ...]
    log_inf: tuple[np.ndarray, ...]
    log_len: tuple[np.ndarray, ...]
    log_o2: np.ndarray | None = None
    log_u1: np.ndarray | None = None
    is_x: np.ndarray | None = None
    logw: np.ndarray | None = None
    exact: bool = False

    @property
    def n_words(self) -> int:
        return int(np.exp(self.logw).sum().round()) if self.logw is not None else len(self.logm)

    @property
    def is_carpet(self) -> bool:
        return len(self.log_sup) == 2

    def alphas(self, proxy: str = "sup") -> tuple[np.ndarray, np.ndarray]:
        """Log singular-value proxies ``(alpha1, alpha2)``.

        For Cantor systems both entries are the same single proxy.
        """
        if proxy not in PROXIES:
            raise ValueError(f"proxy must be one of {PROXIES}")
        if not self.is_carpet:
            src = {"sup": self.log_sup, "inf": self.log_inf, "length": self.log_len}[proxy][0]
            return src, src
        if proxy == "sup":
            return np.maximum(self.log_sup[0], self.log_sup[1]), self.log_o2
        if proxy == "inf":
            return self.log_u1, np.minimum(self.log_inf[0], self.log_inf[1])
        return np.maximum(self.log_len[0], self.log_len[1]), np.minimum(self.log_len[0], self.log_len[1])

    def base(self) -> np.ndarray:
        return self.logw if self.logw is not None else np.zeros_like(self.logm)


# ------------------------------------------------------------------ masses


class _BernoulliTracker:
    def __init__(self, measure: BernoulliMeasure, m: int = 1):
        self.logp = measure.log_weights
        self.logm = np.zeros(m)

    def prepend(self, j: int) -> "_BernoulliTracker":
        out = object.__new__(_BernoulliTracker)
        out.logp = self.logp
        out.logm = self.logm + self.logp[j]
        return out

    def log_mass(self) -> np.ndarray:
        return self.logm

    @staticmethod
    def concat(parts):
        out = object.__new__(_BernoulliTracker)
        out.logp = parts[0].logp
        out.logm = np.concatenate([p.logm for p in parts])
        return out


class _TableTracker:
    """Tracks the base-K code of the first ``depth`` symbols plus a tail log-mass."""

    def __init__(self, measure: TableMeasure, m: int = 1):
        self.measure = measure
        self.code = np.zeros(m, dtype=np.int64)
        self.head = np.zeros(m, dtype=np.int64)
        self.tail = np.zeros(m)

    def prepend(self, j: int) -> "_TableTracker":
        meas = self.measure
        k, d = meas.n_symbols, meas.depth
        out = object.__new__(_TableTracker)
        out.measure = meas
        full = self.head >= d
        dropped = self.code % k
        logp = np.log(meas.fitted_weights)
        out.tail = self.tail + np.where(full, logp[dropped], 0.0)
        kept = np.where(full, self.code // k, self.code)
        hl = np.where(full, d - 1, self.head)
        out.code = j * k ** hl + kept
        out.head = hl + 1
        return out

    def log_mass(self) -> np.ndarray:
        lm = np.empty(len(self.code))
        for h in np.unique(self.head):
            sel = self.head == h
            lm[sel] = np.log(self.measure.levels[h][self.code[sel]])
        return lm + self.tail

    @staticmethod
    def concat(parts):
        out = object.__new__(_TableTracker)
        out.measure = parts[0].measure
        out.code = np.concatenate([p.code for p in parts])
        out.head = np.concatenate([p.head for p in parts])
        out.tail = np.concatenate([p.tail for p in parts])
        return out


def _tracker(measure, m=1):
    if isinstance(measure, BernoulliMeasure):
        return _BernoulliTracker(measure, m)
    if isinstance(measure, TableMeasure):
        return _TableTracker(measure, m)
    raise TypeError(f"unsupported measure {type(measure).__name__}")


# ------------------------------------------------------------------ geometry


@dataclass
class _State:
    pts: list[np.ndarray]
    ders: list[np.ndarray]
    mass: object

    def __len__(self):
        return self.pts[0].shape[0]


def _grid_for(coord, grid: int) -> np.ndarray:
    return np.array([0.0, 1.0]) if coord.all_affine else np.linspace(0.0, 1.0, grid + 1)


def _prepend_many(system, state: _State, symbols) -> list[_State]:
    """Children ``j . w`` for each ``j`` in ``symbols``, sharing map evaluations."""
    cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    out = []
    for j in symbols:
        pts, ders = [], []
        for c, coord in enumerate(system.coordinates):
            m = int(coord.index[j])
            if (c, m) not in cache:
                v, d = value_and_deriv(coord.maps[m], state.pts[c])
                cache[(c, m)] = (np.clip(v, 0.0, 1.0), np.abs(d) * state.ders[c])
            p, d = cache[(c, m)]
            pts.append(p)
            ders.append(d)
        out.append(_State(pts, ders, state.mass.prepend(j)))
    return out


def _concat(parts: list[_State]) -> _State:
    if len(parts) == 1:
        return parts[0]
    n_coords = len(parts[0].pts)
    return _State([np.vstack([p.pts[c] for p in parts]) for c in range(n_coords)],
                  [np.vstack([p.ders[c] for p in parts]) for c in range(n_coords)],
                  type(parts[0].mass).concat([p.mass for p in parts]))


def _log(x):
    return np.log(np.maximum(x, TINY))


def _reduce(system, state: _State) -> dict:
    sup, inf, length = [], [], []
    for c in range(len(state.pts)):
        d = state.ders[c]
        sup.append(_log(d.max(axis=1)))
        inf.append(_log(d.min(axis=1)))
        length.append(_log(np.abs(state.pts[c][:, -1] - state.pts[c][:, 0])))
    out = {"logm": state.mass.log_mass(), "sup": sup, "inf": inf, "len": length}
    if system.is_carpet:
        dx, dy = state.ders
        if dx.shape[1] != dy.shape[1]:
            # an affine coordinate has a constant derivative
            dx, dy = (dx[:, :1], dy) if dx.shape[1] == 2 else (dx, dy[:, :1])
        out["o2"] = _log(np.minimum(dx, dy).max(axis=1))
        out["u1"] = _log(np.maximum(dx, dy).min(axis=1))
        wx = np.abs(state.pts[0][:, -1] - state.pts[0][:, 0])
        wy = np.abs(state.pts[1][:, -1] - state.pts[1][:, 0])
        out["is_x"] = wx >= wy * (1 - 1e-12)
    return out


def _merge(system, parts: list[dict], level, mode, cutoff) -> LevelData:
    n_coords = 2 if system.is_carpet else 1
    cat = np.concatenate
    data = LevelData(
        level=level, mode=mode, cutoff=cutoff,
        logm=cat([p["logm"] for p in parts]),
        log_sup=tuple(cat([p["sup"][c] for p in parts]) for c in range(n_coords)),
        log_inf=tuple(cat([p["inf"][c] for p in parts]) for c in range(n_coords)),
        log_len=tuple(cat([p["len"][c] for p in parts]) for c in range(n_coords)),
    )
    if system.is_carpet:
        data.log_o2 = cat([p["o2"] for p in parts])
        data.log_u1 = cat([p["u1"] for p in parts])
        data.is_x = cat([p["is_x"] for p in parts])
    return data


# ------------------------------------------------------------------ expansion


def _steps(system, induced: int | None):
    """Return ``(branching, step)`` where ``step(state)`` yields child states."""
    k = system.n_symbols
    if induced is None:
        return k, lambda st: iter(_prepend_many(system, st, range(k)))
    i0 = system.hyperbolic_symbol
    others = [j for j in range(k) if j != i0]

    def step(st):
        # block j_1..j_m i0 is prepended as i0 first, then j_m, ..., j_1
        cur = _prepend_many(system, st, [i0])[0]
        yield cur
        for _ in range(induced - 1):
            cur = _concat(_prepend_many(system, cur, others))
            yield cur

    return induced_alphabet_size(k, induced), step


def _expand(system, state, remaining, branching, step, chunk, out):
    if remaining == 0:
        out.append(_reduce(system, state))
        return
    if len(state) * branching <= chunk:
        _expand(system, _concat(list(step(state))), remaining - 1, branching, step, chunk, out)
    else:
        for kid in step(state):
            _expand(system, kid, remaining - 1, branching, step, chunk, out)


def samples_per_word(system, grid: int = BULK_GRID) -> int:
    return sum(len(_grid_for(c, grid)) for c in system.coordinates)


def fast_path_ok(system, measure, induced) -> bool:
    return (induced is None and isinstance(measure, BernoulliMeasure)
            and all(c.all_affine for c in system.coordinates))


def default_level(system, measure, induced: int | None = None, budget: int = DEFAULT_BUDGET,
                  grid: int = BULK_GRID, max_level: int = 64) -> int:
    """Largest level whose enumeration fits the budget.

    Count-aggregated affine levels are budgeted by word count, sampled
    levels by word count times grid samples per word.
    """
    if induced is None:
        branching = system.n_symbols
        cost = 1 if fast_path_ok(system, measure, induced) else samples_per_word(system, grid)
    else:
        branching = induced_alphabet_size(system.n_symbols, induced)
        cost = samples_per_word(system, grid)
    n = 0
    while n < max_level and cost * branching ** (n + 1) <= budget:
        n += 1
    if n == 0:
        raise CapacityError("not even one level fits the enumeration budget")
    return n


def _compositions(n: int, k: int) -> np.ndarray:
    """All count vectors of ``k`` non-negative ints summing to ``n``."""
    rows = []
    for bars in itertools.combinations(range(n + k - 1), k - 1):
        edges = (-1,) + bars + (n + k - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.array(rows, dtype=np.int64).reshape(-1, k)


def _affine_counts(system, measure: BernoulliMeasure, n: int) -> LevelData:
    """Exact level-n data for affine maps and Bernoulli weights via symbol counts."""
    k = system.n_symbols
    counts = _compositions(n, k)
    logw = math.lgamma(n + 1) - np.vectorize(math.lgamma)(counts + 1.0).sum(axis=1)
    logm = counts @ measure.log_weights
    logs = []
    for coord in system.coordinates:
        slopes = np.array([abs(coord.map_for(j).slope) for j in range(k)])
        logs.append(counts @ np.log(slopes))
    data = LevelData(level=n, mode="full", cutoff=None, logm=logm, log_sup=tuple(logs),
                     log_inf=tuple(logs), log_len=tuple(logs), logw=logw, exact=True)
    if system.is_carpet:
        data.log_o2 = np.minimum(logs[0], logs[1])
        data.log_u1 = np.maximum(logs[0], logs[1])
        data.is_x = logs[0] >= logs[1] - 1e-12
    return data


def compute_level(system, measure, n: int | None = None, induced: int | None = None,
                  budget: int = DEFAULT_BUDGET, grid: int = BULK_GRID, threads: int = 1,
                  chunk: int = CHUNK, aggregate: bool = True) -> LevelData:
    """Enumerate level ``n`` (induced blocks when ``induced`` is set).

    ``aggregate=False`` disables the symbol-count shortcut for affine
    Bernoulli systems, which otherwise makes full-alphabet levels exact and
    cheap.
    """
    if measure.n_symbols != system.n_symbols:
        raise ValueError("measure and system have different alphabet sizes")
    if n is None:
        n = default_level(system, measure, induced, budget, grid)
    if n < 1:
        raise ValueError("level must be at least 1")
    if aggregate and fast_path_ok(system, measure, induced):
        if math.comb(n + system.n_symbols - 1, system.n_symbols - 1) > budget:
            raise CapacityError(f"level {n} exceeds the enumeration budget {budget}")
        return _affine_counts(system, measure, n)
    branching, step = _steps(system, induced)
    if branching ** n * samples_per_word(system, grid) > budget:
        raise CapacityError(f"level {n} with {branching} branches exceeds the enumeration budget {budget}")
    root = _State([_grid_for(c, grid)[None, :] for c in system.coordinates],
                  [np.ones((1, len(_grid_for(c, grid)))) for c in system.coordinates],
                  _tracker(measure))
    mode = "full" if induced is None else "induced"
    parts: list[dict] = []
    if threads > 1:
        kids = list(step(root))

        def run(kid):
            local: list[dict] = []
            _expand(system, kid, n - 1, branching, step, chunk, local)
            return local

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for local in pool.map(run, kids):
                parts.extend(local)
    else:
        _expand(system, root, n, branching, step, chunk, parts)
    return _merge(system, parts, n, mode, induced)


class LevelCache:
    """Small keyed memo for level data; systems and measures are keyed by identity."""

    def __init__(self, size: int = 16):
        self.size = size
        self._store: dict = {}

    def get(self, system, measure, **kw) -> LevelData:
        key = (id(system), id(measure), tuple(sorted(kw.items())))
        hit = self._store.get(key)
        if hit is not None and hit[0] is system and hit[1] is measure:
            return hit[2]
        data = compute_level(system, measure, **kw)
        if len(self._store) >= self.size:
            self._store.pop(next(iter(self._store)))
        self._store[key] = (system, measure, data)
        return data

    def clear(self) -> None:
        self._store.clear()


CACHE = LevelCache()
