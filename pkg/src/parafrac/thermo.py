"""Pressure, zeta partial sums and minimal roots for Cantor sets and carpets.

All sums are evaluated in log space.  For a level of words with log masses
``m``, log singular-value proxies ``a1``, ``a2`` and projection exponents
``t``, the level sum is ``sum(exp(q m + t a1 + (s - t) a2))``; for Cantor
systems ``a1 == a2`` and ``t`` drops out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _levels
from .errors import BracketError, CapacityError
from .maps1d import derivative_range
from .measure import BernoulliMeasure, project
from .symbolic import DEFAULT_BUDGET, induced_alphabet_size
from .system import CylinderGeom, word_maps

DEFAULT_TOL = 1e-9
DEFAULT_BRACKET = (-1.0, 2.0)
DEFAULT_Q_GRID = tuple(np.round(np.arange(0.0, 3.0 + 1e-9, 0.25), 10))
PROJECTION_CUTOFF = 30
EXCLUDED_MASS = 1e-12
MAX_PROJECTION_ALPHABET = 1024
BOUND_SLACK = 5e-3
MAX_DOUBLINGS = 60
AMBIENT_SLACK = 0.5


def _check_ambient(root: float, dim: int, proxy: str) -> None:
    # tau(q) <= tau(0) <= dim for q >= 0, so a larger level root is an artefact
    if root > dim + AMBIENT_SLACK:
        raise BracketError(f"level root {root:.4g} exceeds the ambient dimension {dim}; the {proxy!r} sums are "
                           "dominated by parabolic words (try induced mode or the length proxy)")


def _mode_label(induced: int | None) -> str:
    return "full" if induced is None else f"induced({induced})"


def phi_singular(geom: CylinderGeom, mass: float, s: float, q: float, t_f: float, t_g: float,
                 alpha1: float | None = None, alpha2: float | None = None) -> float:
    """Singular value function ``mass**q * a1**t * a2**(s - t)``.

    ``t`` is ``t_f`` for cylinders at least as wide as tall and ``t_g``
    otherwise; ``a1``/``a2`` default to ``o1``/``o2``.
    """
    if mass == 0:
        return 0.0
    a1 = geom.o1 if alpha1 is None else alpha1
    a2 = geom.o2 if alpha2 is None else alpha2
    t = t_f if geom.longer_axis == "x" else t_g
    return float(mass ** q * a1 ** t * a2 ** (s - t))


@dataclass(frozen=True)
class PressureSample:
    s: float
    q: float
    level: int
    mode: str
    value: float


def _log_terms(data: _levels.LevelData, q: float, proxy: str, t_f: float = 0.0, t_g: float = 0.0):
    """Return ``(A, B)`` with per-word log terms ``A + s B``."""
    a1, a2 = data.alphas(proxy)
    a = data.base() + q * data.logm
    if data.is_carpet:
        t = np.where(data.is_x, t_f, t_g)
        a = a + t * (a1 - a2)
    return a, a2


def _level(system, measure, n, induced, budget, grid, threads) -> _levels.LevelData:
    return _levels.CACHE.get(system, measure, n=n, induced=induced, budget=budget, grid=grid, threads=threads)


def _sample(data, s, q, proxy, t_f=0.0, t_g=0.0) -> PressureSample:
    a, b = _log_terms(data, q, proxy, t_f, t_g)
    value = float(np.exp(logsumexp(a + s * b) / data.level))
    return PressureSample(float(s), float(q), data.level, _mode_label(data.cutoff), value)


def level_pressure_cantor(system, measure, s: float, q: float, n: int | None = None,
                          induced: int | None = None, proxy: str = "sup",
                          budget: int = DEFAULT_BUDGET, grid: int = _levels.BULK_GRID,
                          threads: int = 1) -> PressureSample:
    """``(sum_i P[i]^q |h_i'|^s)^(1/n)`` at a finite level.

    In induced mode ``n`` counts blocks of the truncated induced alphabet.
    """
    if q < 0:
        raise ValueError("q must be non-negative")
    return _sample(_level(system, measure, n, induced, budget, grid, threads), s, q, proxy)


def level_pressure_carpet(system, measure, s: float, q: float, t_f: float, t_g: float,
                          n: int | None = None, induced: int | None = None, proxy: str = "sup",
                          budget: int = DEFAULT_BUDGET, grid: int = _levels.BULK_GRID,
                          threads: int = 1) -> PressureSample:
    if q < 0:
        raise ValueError("q must be non-negative")
    return _sample(_level(system, measure, n, induced, budget, grid, threads), s, q, proxy, t_f, t_g)


# ------------------------------------------------------------------ roots


@dataclass(frozen=True)
class RootResult:
    root: float
    q: float
    level: int
    mode: str
    bracket: tuple[float, float]
    iterations: int
    t_f: float | None = None
    t_g: float | None = None


def _bisect_root(a: np.ndarray, b: np.ndarray, tol: float, bracket: tuple[float, float]):
    """Minimal ``s`` with ``logsumexp(a + s b) <= 0``; ``b <= 0`` makes this monotone."""

    def f(s):
        return logsumexp(a + s * b)

    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    width = hi - lo
    n = 0
    while f(lo) <= 0:
        lo -= width
        width *= 2
        n += 1
        if n > MAX_DOUBLINGS:
            raise BracketError("pressure stays below 1 as s decreases; no minimal root")
    width = hi - lo
    n = 0
    while f(hi) > 0:
        hi += width
        width *= 2
        n += 1
        if n > MAX_DOUBLINGS:
            raise BracketError("pressure stays above 1 as s increases; root not bracketed")
    used = (lo, hi)
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), used, it


def solve_gamma(system, measure, q: float, n: int | None = None, induced: int | None = None,
                tol: float = DEFAULT_TOL, bracket=DEFAULT_BRACKET, proxy: str = "sup",
                budget: int = DEFAULT_BUDGET, grid: int = _levels.BULK_GRID, threads: int = 1) -> RootResult:
    if system.is_carpet:
        raise TypeError("use solve_beta for carpets")
    if q < 0:
        raise ValueError("q must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    data = _level(system, measure, n, induced, budget, grid, threads)
    a, b = _log_terms(data, q, proxy)
    root, used, it = _bisect_root(a, b, tol, bracket)
    _check_ambient(root, 1, proxy)
    return RootResult(root, float(q), data.level, _mode_label(induced), used, it)


def gamma_root(system, measure, q: float, n: int | None = None, induced: int | None = None,
               tol: float = DEFAULT_TOL, bracket=DEFAULT_BRACKET, **kw) -> float:
    """Minimal real root ``s`` of ``P_n(s, q) = 1`` for a Cantor system.

    Bisection on a bracket expanded by doubling; the result is the midpoint
    of a final bracket of width at most ``tol``.
    """
    return solve_gamma(system, measure, q, n, induced, tol, bracket, **kw).root


def projection_exponents(system, measure, q: float, tol: float = DEFAULT_TOL / 10,
                         cutoff: int = PROJECTION_CUTOFF, proxy: str = "sup",
                         budget: int = DEFAULT_BUDGET, grid: int = _levels.BULK_GRID,
                         threads: int = 1, induced: bool | None = None) -> tuple[float, float]:
    """``(t_f(q), t_g(q))`` as minimal roots for the two projected measures.

    A projection with a parabolic map is solved on its truncated induced
    alphabet (unless ``induced`` forces a choice); otherwise on the full
    alphabet.  The cutoff is at least ``cutoff`` and is raised until the
    excluded mass drops below ``EXCLUDED_MASS`` or the alphabet would exceed
    ``MAX_PROJECTION_ALPHABET`` symbols.
    """
    out = []
    for axis in ("x", "y"):
        pm = _projection(system, measure, axis)
        parabolic = any(h.parabolic_point is not None for h in pm.system.maps)
        use_induced = parabolic if induced is None else induced
        n_cut = _projection_cutoff(pm, cutoff) if use_induced else None
        out.append(solve_gamma(pm.system, pm.measure, q, induced=n_cut,
                               tol=tol, proxy=proxy, budget=budget, grid=grid, threads=threads).root)
    return out[0], out[1]


def _projection_cutoff(pm, cutoff: int) -> int:
    k = pm.system.n_symbols
    i0 = pm.system.hyperbolic_symbol
    # Bernoulli mass left out of I_N is (1 - p_{i0})**N
    rest = 1.0 - pm.measure.weights[i0]
    n = cutoff
    if rest > 0:
        n = max(n, int(np.ceil(np.log(EXCLUDED_MASS) / np.log(rest))))
    while n > cutoff and induced_alphabet_size(k, n) > MAX_PROJECTION_ALPHABET:
        n -= 1
    return n


_PROJ: dict = {}


def _projection(system, measure, axis):
    key = (id(system), id(measure), axis)
    hit = _PROJ.get(key)
    if hit is None or hit[0] is not system or hit[1] is not measure:
        if len(_PROJ) > 32:
            _PROJ.clear()
        hit = (system, measure, project(system, measure, axis))
        _PROJ[key] = hit
    return hit[2]


def solve_beta(system, measure, q: float, n: int | None = None, induced: int | None = None,
               tol: float = DEFAULT_TOL, bracket=DEFAULT_BRACKET, proxy: str = "sup",
               budget: int = DEFAULT_BUDGET, grid: int = _levels.BULK_GRID, threads: int = 1,
               t_f: float | None = None, t_g: float | None = None,
               projection_cutoff: int = PROJECTION_CUTOFF) -> RootResult:
    if not system.is_carpet:
        raise TypeError("use solve_gamma for Cantor systems")
    if q < 0:
        raise ValueError("q must be non-negative")
    if t_f is None or t_g is None:
        tf, tg = projection_exponents(system, measure, q, tol / 10, projection_cutoff, proxy,
                                      budget, grid, threads)
        t_f = tf if t_f is None else t_f
        t_g = tg if t_g is None else t_g
    data = _level(system, measure, n, induced, budget, grid, threads)
    a, b = _log_terms(data, q, proxy, t_f, t_g)
    root, used, it = _bisect_root(a, b, tol, bracket)
    _check_ambient(root, 2, proxy)
    return RootResult(root, float(q), data.level, _mode_label(induced), used, it, t_f, t_g)


def beta_root(system, measure, q: float, n: int | None = None, induced: int | None = None,
              tol: float = DEFAULT_TOL, bracket=DEFAULT_BRACKET, **kw) -> float:
    """Minimal real root of the carpet pressure with projection exponents ``t_f``, ``t_g``."""
    return solve_beta(system, measure, q, n, induced, tol, bracket, **kw).root


def solve_root(system, measure, q, **kw) -> RootResult:
    return (solve_beta if system.is_carpet else solve_gamma)(system, measure, q, **kw)


# ------------------------------------------------------------------ zeta


@dataclass
class ZetaResult:
    s: float
    q: float
    terms: np.ndarray
    partial_sums: np.ndarray
    ratios: np.ndarray
    convergent: bool


def zeta_partial(system, measure, s: float, q: float, n_max: int = 10, induced: int | None = None,
                 proxy: str = "sup", t_f: float | None = None, t_g: float | None = None,
                 budget: int = DEFAULT_BUDGET, grid: int = _levels.BULK_GRID, window: int = 5) -> ZetaResult:
    """Cumulative sums of the zeta series up to level ``n_max``.

    The series is flagged convergent when each of the last ``window`` term
    ratios is below 1.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    if system.is_carpet and (t_f is None or t_g is None):
        t_f, t_g = projection_exponents(system, measure, q, proxy=proxy, budget=budget, grid=grid)
    logs = []
    for n in range(1, n_max + 1):
        data = _levels.compute_level(system, measure, n=n, induced=induced, budget=budget, grid=grid)
        a, b = _log_terms(data, q, proxy, t_f or 0.0, t_g or 0.0)
        logs.append(float(logsumexp(a + s * b)))
    logs_arr = np.array(logs)
    terms = np.exp(logs_arr)
    ratios = np.exp(np.diff(logs_arr))
    tail = ratios[-window:]
    return ZetaResult(float(s), float(q), terms, np.cumsum(terms), ratios, bool(np.all(tail < 1.0)))


# ------------------------------------------------------------------ checks


@dataclass
class MultiplicativityReport:
    s: float
    q: float
    t_f: float
    t_g: float
    regime: str
    ratios: np.ndarray
    envelopes: np.ndarray
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _word_phi(system, measure, word, s, q, t_f, t_g) -> float:
    """Singular value function of one word built from its rectangle sides."""
    ivals = system.word_intervals([word])
    wx = ivals[0][0, 1] - ivals[0][0, 0]
    wy = ivals[1][0, 1] - ivals[1][0, 0]
    t = t_f if wx >= wy * (1 - 1e-12) else t_g
    return measure.mass(word) ** q * max(wx, wy) ** t * min(wx, wy) ** (s - t)


def _distortion(system, word, grid=16) -> float:
    return max(derivative_range(ms, grid=grid, refinements=1).distortion for ms in word_maps(system, word))


def multiplicativity_check(system, measure, s: float, q: float, t_f: float, t_g: float,
                           trials: int = 200, max_len: int = 6, seed: int = 0) -> MultiplicativityReport:
    """Compare ``Phi(ij)`` with ``Phi(i) Phi(j)`` on random word pairs.

    ``Phi`` uses the rectangle sides.  The envelope for a pair is
    ``(D_i D_j D_ij)**T`` with ``D`` the observed derivative distortion of a
    word and ``T = |s| + 2 max(|t_f|, |t_g|)``; affine systems have
    ``D = 1``.  Below ``t_f + t_g`` ratios must stay under the envelope,
    above it they must stay over its reciprocal, and at equality both.
    """
    if not system.is_carpet:
        raise TypeError("multiplicativity is a carpet property")
    if not isinstance(measure, BernoulliMeasure):
        raise TypeError("multiplicativity_check needs a Bernoulli measure")
    rng = np.random.Generator(np.random.Philox(seed))
    k = system.n_symbols
    big_t = abs(s) + 2 * max(abs(t_f), abs(t_g))
    crit = t_f + t_g
    regime = "sub" if s < crit - 1e-12 else ("super" if s > crit + 1e-12 else "equal")
    ratios, envs, bad = [], [], []
    for _ in range(trials):
        i = tuple(int(v) for v in rng.integers(0, k, size=int(rng.integers(1, max_len + 1))))
        j = tuple(int(v) for v in rng.integers(0, k, size=int(rng.integers(1, max_len + 1))))
        r = _word_phi(system, measure, i + j, s, q, t_f, t_g) / (
            _word_phi(system, measure, i, s, q, t_f, t_g) * _word_phi(system, measure, j, s, q, t_f, t_g))
        env = (_distortion(system, i) * _distortion(system, j) * _distortion(system, i + j)) ** big_t
        ratios.append(r)
        envs.append(env)
        if regime in ("sub", "equal") and r > env * (1 + 1e-9):
            bad.append((i, j, r, env))
        if regime in ("super", "equal") and r < (1 - 1e-9) / env:
            bad.append((i, j, r, env))
    return MultiplicativityReport(s, q, t_f, t_g, regime, np.array(ratios), np.array(envs), bad)


@dataclass(frozen=True)
class BoundEntry:
    q: float
    s: float
    level: int
    value: float
    passed: bool


def pressure_bound_checks(system, measure, qs=(0.0, 1.0, 2.0), n: int | None = None,
                          budget: int = DEFAULT_BUDGET, grid: int = _levels.BULK_GRID,
                          slack: float = BOUND_SLACK) -> list[BoundEntry]:
    """Level pressure at ``s = 1`` (Cantor) or ``s = 2`` (carpet) against the bound 1.

    Rectangle and interval lengths are used as singular values; the
    projection exponents use the same choice.
    """
    s = 2.0 if system.is_carpet else 1.0
    data = _level(system, measure, n, None, budget, grid, 1)
    out = []
    for q in qs:
        if system.is_carpet:
            tf, tg = projection_exponents(system, measure, q, proxy="length", budget=budget, grid=grid,
                                          induced=False)
            sample = _sample(data, s, q, "length", tf, tg)
        else:
            sample = _sample(data, s, q, "length")
        out.append(BoundEntry(float(q), s, data.level, sample.value, sample.value <= 1.0 + slack))
    return out


# ------------------------------------------------------------------ curves


@dataclass
class SpectrumCurve:
    q: np.ndarray
    tau: np.ndarray
    method: str
    levels: list[int]
    mode: str
    gaps: np.ndarray | None = None
    errors: dict = field(default_factory=dict)

    def second_differences(self) -> np.ndarray:
        ok = np.isfinite(self.tau)
        return np.diff(self.tau[ok], 2)

    def is_monotone(self, tol: float = 1e-9) -> bool:
        t = self.tau[np.isfinite(self.tau)]
        return bool(np.all(np.diff(t) <= tol))

    def is_convex(self, tol: float = 1e-6) -> bool:
        # assumes an evenly spaced q grid
        return bool(np.all(self.second_differences() >= -tol))

    def tau_at(self, q: float) -> float:
        idx = np.flatnonzero(np.isclose(self.q, q))
        if not idx.size:
            raise KeyError(q)
        return float(self.tau[idx[0]])


def spectrum_curve(system, measure, qs=DEFAULT_Q_GRID, n: int | None = None, induced: int | None = None,
                   tol: float = DEFAULT_TOL, proxy: str = "sup", budget: int = DEFAULT_BUDGET,
                   grid: int = _levels.BULK_GRID, threads: int = 1, with_gap: bool = False) -> SpectrumCurve:
    """Pressure roots over a q grid.

    Failures (bracketing or budget) are recorded per q with ``nan`` in the
    curve.  With ``with_gap`` and an induced mode, the full-alphabet root is
    also computed and ``|full - induced|`` reported.
    """
    qs = np.asarray(qs, dtype=float)
    taus, gaps, levels, errors = [], [], [], {}
    for q in qs:
        try:
            res = solve_root(system, measure, q, n=n, induced=induced, tol=tol, proxy=proxy,
                             budget=budget, grid=grid, threads=threads)
            taus.append(res.root)
            levels.append(res.level)
        except (BracketError, CapacityError) as exc:
            taus.append(np.nan)
            levels.append(0)
            errors[float(q)] = str(exc)
            gaps.append(np.nan)
            continue
        if with_gap and induced is not None:
            try:
                full = solve_root(system, measure, q, tol=tol, proxy=proxy, budget=budget, grid=grid,
                                  threads=threads)
                gaps.append(abs(full.root - res.root))
            except (BracketError, CapacityError):
                gaps.append(np.nan)
        else:
            gaps.append(np.nan)
    return SpectrumCurve(qs, np.array(taus), "pressure_root", levels, _mode_label(induced),
                         np.array(gaps), errors)
