"""Cantor and carpet IFSs: axiom validation, hyperbolic index, cylinder geometry."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ParafracError
from .maps1d import ContractionMap, compose_eval, derivative_range, value_and_deriv
from .symbolic import DEFAULT_BUDGET, Word, induced_alphabet_size

CONTRACTION_SAMPLES = 512
DERIV_FLOOR = 1e-6
OVERLAP_SLACK = 1e-10
GRID_SAMPLES = 33
HYPERBOLIC_MARGIN = 1e-6
HYPERBOLIC_MAX_LEN = 4


class HyperbolicIndexError(ParafracError):
    """No hyperbolic word was found within the search cap."""


@dataclass(frozen=True)
class Coordinate:
    """One coordinate of a system: a map family and the map used by each symbol."""

    maps: tuple[ContractionMap, ...]
    index: np.ndarray

    def map_for(self, symbol: int) -> ContractionMap:
        return self.maps[int(self.index[symbol])]

    @property
    def all_affine(self) -> bool:
        return all(h.is_affine for h in self.maps)


@dataclass(eq=False)
class CantorSystem:
    maps: tuple[ContractionMap, ...]
    name: str = "cantor"

    is_carpet = False

    def __post_init__(self):
        self.maps = tuple(self.maps)

    @property
    def n_symbols(self) -> int:
        return len(self.maps)

    @property
    def holder(self) -> float:
        return min(h.holder_exponent for h in self.maps)

    @cached_property
    def coordinates(self) -> tuple[Coordinate, ...]:
        return (Coordinate(self.maps, np.arange(len(self.maps))),)

    @cached_property
    def hyperbolic_word(self) -> Word:
        return find_hyperbolic_index(self)

    @property
    def hyperbolic_symbol(self) -> int:
        return _single_symbol(self.hyperbolic_word)

    @property
    def parabolic_symbols(self) -> list[int]:
        return [j for j, h in enumerate(self.maps) if h.parabolic_point is not None]

    def word_intervals(self, words) -> list[np.ndarray]:
        return [_compose_endpoints(c, words) for c in self.coordinates]

    def apply_symbols(self, symbols, intervals) -> list[np.ndarray]:
        return _apply_symbols(self, symbols, intervals)

    def to_dict(self) -> dict:
        return {"kind": "cantor", "maps": [h.to_dict() for h in self.maps]}


@dataclass(eq=False)
class CarpetSystem:
    """Carpet IFS ``S_i = (f_i, g_i)`` laid out on a grid.

    ``grid[i] = (column, row)`` picks ``f_i = columns[column]`` and
    ``g_i = rows[row]``, so declared map sharing is exact by construction.
    """

    columns: tuple[ContractionMap, ...]
    rows: tuple[ContractionMap, ...]
    grid: tuple[tuple[int, int], ...]
    name: str = "carpet"

    is_carpet = True

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.rows = tuple(self.rows)
        self.grid = tuple((int(c), int(r)) for c, r in self.grid)
        for c, r in self.grid:
            if not (0 <= c < len(self.columns) and 0 <= r < len(self.rows)):
                raise ValueError(f"grid cell {(c, r)} references a missing map")

    @property
    def n_symbols(self) -> int:
        return len(self.grid)

    @property
    def components(self) -> list[tuple[ContractionMap, ContractionMap]]:
        return [(self.columns[c], self.rows[r]) for c, r in self.grid]

    @property
    def holder(self) -> tuple[float, float]:
        return (min(h.holder_exponent for h in self.columns), min(h.holder_exponent for h in self.rows))

    @cached_property
    def coordinates(self) -> tuple[Coordinate, ...]:
        return (Coordinate(self.columns, np.array([c for c, _ in self.grid])),
                Coordinate(self.rows, np.array([r for _, r in self.grid])))

    @cached_property
    def hyperbolic_word(self) -> Word:
        return find_hyperbolic_index(self)

    @property
    def hyperbolic_symbol(self) -> int:
        return _single_symbol(self.hyperbolic_word)

    def word_intervals(self, words) -> list[np.ndarray]:
        return [_compose_endpoints(c, words) for c in self.coordinates]

    def apply_symbols(self, symbols, intervals) -> list[np.ndarray]:
        return _apply_symbols(self, symbols, intervals)

    def to_dict(self) -> dict:
        return {"kind": "carpet", "columns": [h.to_dict() for h in self.columns],
                "rows": [h.to_dict() for h in self.rows], "grid": [list(g) for g in self.grid]}


System = CantorSystem | CarpetSystem


def _single_symbol(word: Word) -> int:
    if len(word) != 1:
        raise HyperbolicIndexError(
            f"induced mode needs a single hyperbolic symbol, found the word {word}")
    return word[0]


def _apply_symbols(system, symbols, intervals: list[np.ndarray]) -> list[np.ndarray]:
    """Map each row of ``intervals[c]`` through the coordinate-c map of ``symbols[row]``."""
    sym = np.asarray(symbols)
    out = []
    for coord, iv in zip(system.coordinates, intervals):
        ids = coord.index[sym]
        res = np.empty_like(iv)
        for m in np.unique(ids):
            sel = ids == m
            res[sel] = np.clip(coord.maps[m]._value(iv[sel]), 0.0, 1.0)
        out.append(np.sort(res, axis=1))
    return out


def _compose_endpoints(coord: Coordinate, words) -> np.ndarray:
    """Images of the endpoints 0 and 1 under each composed word, shape (M, 2)."""
    arr = np.asarray(words, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    pts = np.tile(np.array([0.0, 1.0]), (arr.shape[0], 1))
    ids = coord.index[arr] if arr.size else arr
    for pos in range(arr.shape[1] - 1, -1, -1):
        col = ids[:, pos]
        for m in np.unique(col):
            sel = col == m
            pts[sel] = np.clip(coord.maps[m]._value(pts[sel]), 0.0, 1.0)
    return np.sort(pts, axis=1)


def word_maps(system: System, word: Sequence[int]) -> list[list[ContractionMap]]:
    """Per-coordinate map sequences for ``word``."""
    return [[c.map_for(j) for j in word] for c in system.coordinates]


# ---------------------------------------------------------------- validation


@dataclass
class Check:
    axiom: str
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    system: str
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, axiom: str, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(axiom, name, bool(passed), detail))

    def table(self) -> str:
        width = max((len(c.name) for c in self.checks), default=4)
        lines = [f"{c.axiom:<4} {c.name:<{width}}  {'pass' if c.passed else 'FAIL'}  {c.detail}".rstrip()
                 for c in self.checks]
        return "\n".join(lines)


def _check_map(report: ValidationReport, axiom_c: str, axiom_d: str, label: str, h: ContractionMap) -> None:
    xs = np.linspace(0.0, 1.0, CONTRACTION_SAMPLES)
    vals, ders = value_and_deriv(h, xs)
    ad = np.abs(ders)
    p = h.parabolic_point
    in_range = vals.min() >= -1e-12 and vals.max() <= 1 + 1e-12
    report.add(axiom_c, f"{label} maps into [0,1]", in_range,
               f"image [{vals.min():.6g}, {vals.max():.6g}]")
    away = np.ones_like(xs, dtype=bool) if p is None else np.abs(xs - p) > 1e-12
    worst = float(ad[away].max()) if away.any() else 0.0
    strict = worst < 1.0 - 1e-9 and float(ad.max()) <= 1.0 + 1e-12
    report.add(axiom_c, f"{label} contraction", strict, f"sup|h'| away from parabolic point {worst:.6g}")
    report.add(axiom_d, f"{label} derivative non-vanishing", float(ad.min()) > DERIV_FLOOR,
               f"inf|h'| {ad.min():.6g}")
    if p is not None:
        hp, dp = value_and_deriv(h, np.array([p]))
        ok = abs(abs(dp[0]) - 1.0) <= 1e-9 and abs(hp[0] - p) <= 1e-12
        report.add(axiom_c, f"{label} parabolic point {p:g}", ok,
                   f"h(p)-p={hp[0] - p:.2e}, |h'(p)|-1={abs(dp[0]) - 1:.2e}")


def _disjoint(maps: Sequence[ContractionMap]) -> tuple[bool, str]:
    ends = np.sort(np.array([[h._value(np.array(0.0)), h._value(np.array(1.0))] for h in maps],
                            dtype=float), axis=1)
    order = np.argsort(ends[:, 0])
    ends = ends[order]
    for a, b in zip(range(len(ends) - 1), range(1, len(ends))):
        if ends[a, 1] > ends[b, 0] + OVERLAP_SLACK:
            return False, f"images of maps {order[a]} and {order[b]} overlap"
    return True, ""


def validate(system: System) -> ValidationReport:
    """Check the axioms numerically and collect pass/fail entries.

    Mathematical violations are reported, never raised.
    """
    report = ValidationReport(system.name)
    report.add("", "at least two maps", system.n_symbols >= 2, f"{system.n_symbols} symbols")
    if not system.is_carpet:
        for j, h in enumerate(system.maps):
            _check_map(report, "A1'", "A2'", f"h{j}", h)
        ok, why = _disjoint(system.maps)
        report.add("A3'", "disjoint level-1 interiors", ok, why)
        return report

    for axis, family in (("f", system.columns), ("g", system.rows)):
        for j, h in enumerate(family):
            _check_map(report, "A1", "A2", f"{axis}{j}", h)
    cells = list(system.grid)
    report.add("A3", "distinct grid cells", len(set(cells)) == len(cells),
               "" if len(set(cells)) == len(cells) else "two symbols share a column and a row")
    for axis, family, coord in (("column", system.columns, 0), ("row", system.rows, 1)):
        used = sorted({c[coord] for c in cells})
        ok, why = _disjoint([family[u] for u in used])
        report.add("A3", f"disjoint {axis} images", ok, why)
    # declared sharing must agree numerically
    xs = np.linspace(0.0, 1.0, GRID_SAMPLES)
    comps = system.components
    agree = True
    for a, b in itertools.combinations(range(len(cells)), 2):
        for coord in (0, 1):
            if cells[a][coord] == cells[b][coord]:
                d = np.abs(comps[a][coord]._value(xs) - comps[b][coord]._value(xs)).max()
                agree &= bool(d <= 1e-10)
    report.add("A3", "grid consistency", agree)
    n_cols = len({c for c, _ in cells})
    n_rows = len({r for _, r in cells})
    flat = n_cols < 2 or n_rows < 2
    report.add("A3", "not contained in an axis line", not flat,
               "attractor lies on a line; use a Cantor system for its projection" if flat else "")
    return report


# ---------------------------------------------------------- hyperbolic index


def find_hyperbolic_index(system: System, max_len: int = HYPERBOLIC_MAX_LEN,
                          margin: float = HYPERBOLIC_MARGIN) -> Word:
    """Shortest word (lexicographic tie-break) contracting strictly in every coordinate."""
    k = system.n_symbols
    for n in range(1, max_len + 1):
        for word in itertools.product(range(k), repeat=n):
            if all(derivative_range(ms).upper <= 1.0 - margin for ms in word_maps(system, word)):
                return tuple(word)
    raise HyperbolicIndexError(f"no hyperbolic word up to length {max_len}; the system looks degenerate")


# ---------------------------------------------------------- cylinder geometry


@dataclass(frozen=True)
class CylinderGeom:
    word: Word
    x_interval: tuple[float, float]
    y_interval: tuple[float, float] | None
    o1: float
    o2: float
    u1: float
    u2: float
    longer_axis: str
    distortion: float

    @property
    def lengths(self) -> tuple[float, ...]:
        out = [self.x_interval[1] - self.x_interval[0]]
        if self.y_interval is not None:
            out.append(self.y_interval[1] - self.y_interval[0])
        return tuple(out)


def cylinder_geometry(system: System, word: Sequence[int], grid: int = 64,
                      refinements: int = 2) -> CylinderGeom:
    """Image intervals and singular-value brackets of one cylinder.

    For carpets ``o2``/``u1`` use ``max_x min`` / ``min_x max`` of the two
    coordinate derivatives sampled on a common grid.  For Cantor systems the
    second singular value coincides with the first.
    """
    word = tuple(int(s) for s in word)
    if not word:
        raise ValueError("word must be non-empty")
    seqs = word_maps(system, word)
    bounds = [derivative_range(ms, grid=grid, refinements=refinements) for ms in seqs]
    ivals = [tuple(float(v) for v in iv[0]) for iv in system.word_intervals([word])]
    distortion = max(b.distortion for b in bounds)
    if not system.is_carpet:
        b = bounds[0]
        return CylinderGeom(word, ivals[0], None, b.upper, b.upper, b.lower, b.lower, "x", distortion)
    xs = np.linspace(0.0, 1.0, grid + 1)
    dx = np.abs(compose_eval(seqs[0], xs)[1])
    dy = np.abs(compose_eval(seqs[1], xs)[1])
    o1 = max(bounds[0].upper, bounds[1].upper)
    o2 = min(float(np.max(np.minimum(dx, dy))), o1)
    u2 = min(bounds[0].lower, bounds[1].lower)
    u1 = max(min(float(np.min(np.maximum(dx, dy))), o1), u2)
    wx = ivals[0][1] - ivals[0][0]
    wy = ivals[1][1] - ivals[1][0]
    return CylinderGeom(word, ivals[0], ivals[1], o1, o2, u1, u2, "x" if wx >= wy else "y", distortion)


# ---------------------------------------------------------- summability


@dataclass
class Summability:
    exponent: float
    cutoffs: list[int]
    partial_sums: list[float]
    increments: np.ndarray
    power_slope: float
    geometric_ratio: float

    @property
    def summable(self) -> bool:
        return bool(self.power_slope < -1.0)

    @property
    def verdict(self) -> str:
        return "summable" if self.summable else "slow/divergent"


def check_summability(system: CantorSystem, i0: int | None = None, cutoff: int = 64,
                      exponent: float | None = None, budget: int = DEFAULT_BUDGET) -> Summability:
    """Partial sums of ``|h_i([0,1])|**exponent`` over truncated induced alphabets.

    ``increments[m-1]`` is the contribution of entries of length ``m``.  The
    tail of the increments is fitted by a power law in ``m``; a local
    exponent below -1 counts as summable (geometric decay gives a very
    negative exponent).  The fitted geometric rate is reported alongside.
    This reports a trend, it certifies nothing.
    """
    if system.is_carpet:
        raise TypeError("summability is checked per coordinate on projected systems")
    if i0 is None:
        i0 = system.hyperbolic_symbol
    if exponent is None:
        exponent = system.holder
    if not 0 < exponent <= 1:
        raise ValueError("exponent must lie in (0, 1]")
    k = system.n_symbols
    while cutoff > 1 and induced_alphabet_size(k, cutoff) > budget:
        cutoff -= 1
    others = [j for j in range(k) if j != i0]
    coord = system.coordinates[0]
    # prepend non-i0 symbols to the endpoint images of h_{i0}
    pts = np.sort(coord.map_for(i0)._value(np.array([0.0, 1.0])))[None, :]
    incs = []
    for m in range(1, cutoff + 1):
        incs.append(float((np.abs(pts[:, 1] - pts[:, 0]) ** exponent).sum()))
        if m == cutoff:
            break
        pts = np.vstack([np.sort(coord.map_for(j)._value(pts), axis=1) for j in others])
    incs_arr = np.array(incs)
    partial = np.cumsum(incs_arr)
    cuts = [c for c in (4, 8, 16, 32, 64, 128, 256) if c < cutoff] + [cutoff]
    tail = np.arange(max(len(incs_arr) // 2, 1), len(incs_arr))
    pos = incs_arr[tail] > 0
    if pos.sum() >= 2:
        m = tail[pos] + 1.0
        y = np.log(incs_arr[tail][pos])
        power = float(np.polyfit(np.log(m), y, 1)[0])
        ratio = float(np.exp(np.polyfit(m, y, 1)[0]))
    else:
        power, ratio = -np.inf, 0.0
    return Summability(exponent, cuts, [float(partial[c - 1]) for c in cuts], incs_arr, power, ratio)
