"""Box-counting moments, chaos-game sampling and the parabolic local-exponent trace."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .maps1d import value_and_deriv
from .measure import BernoulliMeasure, TableMeasure
from .symbolic import DEFAULT_BUDGET, delta_stopping

SNAP = 1e-9
FREEZE_DIAMETER = 1e-12
CHAOS_DEPTH = 60


@dataclass
class GridMoments:
    delta: float
    q: np.ndarray
    D: np.ndarray
    estimator: str
    truncated_mass: float = 0.0
    occupied: int = 0
    samples: int | None = None

    def at(self, q: float) -> float:
        idx = np.flatnonzero(np.isclose(self.q, q))
        if not idx.size:
            raise KeyError(q)
        return float(self.D[idx[0]])


def _moments(cell_mass: np.ndarray, qs) -> np.ndarray:
    pos = cell_mass[cell_mass > 0]
    out = []
    for q in qs:
        out.append(float(pos.size) if q == 0 else float(np.sum(pos ** q)))
    return np.array(out)


def _axis_pieces(iv: np.ndarray, delta: float):
    """Split intervals over the delta-mesh; returns (owner, cell, fraction)."""
    a, b = iv[:, 0], iv[:, 1]
    i0 = np.floor(a / delta + SNAP).astype(np.int64)
    i1 = np.maximum(np.ceil(b / delta - SNAP).astype(np.int64), i0 + 1)
    counts = i1 - i0
    owner = np.repeat(np.arange(len(a)), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    cell = i0[owner] + offs
    lo = np.maximum(a[owner], cell * delta)
    hi = np.minimum(b[owner], (cell + 1) * delta)
    width = np.maximum(b - a, 0.0)
    frac = np.where(width[owner] > 0, np.clip(hi - lo, 0.0, None) / np.where(width[owner] > 0, width[owner], 1.0),
                    1.0 / counts[owner])
    frac[frac <= SNAP] = 0.0
    # renormalise so each interval hands out exactly its mass
    tot = np.bincount(owner, weights=frac, minlength=len(a))
    frac = frac / tot[owner]
    return owner, cell, frac


def _accumulate(keys: np.ndarray, weights: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(keys, return_inverse=True)
    return np.bincount(inv, weights=weights, minlength=len(uniq))


def grid_moments_pushforward(system, measure, delta: float, qs, depth_cap: int = 5000,
                             induced: int | None = None, budget: int = DEFAULT_BUDGET) -> GridMoments:
    """Moments of the delta-mesh masses built from the delta-stopping set.

    Each stopped cylinder hands its mass to the mesh cells it meets in
    proportion to overlap length (Cantor) or area (carpet).  Mass lost to the
    depth cap is reported, not redistributed.
    """
    st = delta_stopping(system, measure, delta, depth_cap=depth_cap, induced=induced, budget=budget)
    if st.warning:
        warnings.warn(f"truncated mass {st.truncated_mass:.3g} at delta={delta:g}", RuntimeWarning)
    qs = np.asarray(qs, dtype=float)
    if len(st) == 0:
        return GridMoments(delta, qs, np.zeros(len(qs)), "stopping_pushforward", st.truncated_mass, 0)
    ox, cx, fx = _axis_pieces(st.x_intervals, delta)
    if st.y_intervals is None:
        masses = _accumulate(cx, st.masses[ox] * fx)
    else:
        oy, cy, fy = _axis_pieces(st.y_intervals, delta)
        # outer product of the per-axis pieces of each cylinder
        ny = np.bincount(oy, minlength=len(st))
        start_y = np.cumsum(ny) - ny
        rep = ny[ox]
        px = np.repeat(np.arange(len(ox)), rep)
        within = np.arange(rep.sum()) - np.repeat(np.cumsum(rep) - rep, rep)
        py = start_y[ox[px]] + within
        n_side = int(np.ceil(1.0 / delta)) + 2
        keys = cx[px] * n_side + cy[py]
        w = st.masses[ox[px]] * fx[px] * fy[py]
        masses = _accumulate(keys, w)
    return GridMoments(delta, qs, _moments(masses, qs), "stopping_pushforward", st.truncated_mass,
                       int(np.count_nonzero(masses > 0)))


# ------------------------------------------------------------------ chaos game


def _apply(coord, sym: np.ndarray, x: np.ndarray) -> np.ndarray:
    ids = coord.index[sym]
    if coord.all_affine:
        slope = np.array([h.slope for h in coord.maps])
        offset = np.array([h.offset for h in coord.maps])
        return np.clip(slope[ids] * x + offset[ids], 0.0, 1.0)
    out = np.empty_like(x)
    for m in np.unique(ids):
        sel = ids == m
        out[sel] = value_and_deriv(coord.maps[m], x[sel])[0]
    return np.clip(out, 0.0, 1.0)


def chaos_game_sample(system, measure, points: int, depth: int = CHAOS_DEPTH, seed: int = 0,
                      start=(0.5, 0.5), freeze: float = FREEZE_DIAMETER) -> np.ndarray:
    """Draw ``points`` samples of the attractor measure; shape (points, d).

    Bernoulli words are applied one symbol at a time while the image of the
    unit interval (square) under the composition is tracked; a point stops
    moving once that cylinder is smaller than ``freeze`` or after ``depth``
    symbols.  Table measures draw each word symbol by symbol from the
    conditional cylinder masses, then compose the maps innermost first.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rng = np.random.Generator(np.random.Philox(seed))
    coords = system.coordinates
    dim = len(coords)
    x = [np.full(points, float(start[c])) for c in range(dim)]
    k = system.n_symbols

    if isinstance(measure, BernoulliMeasure):
        lo = [np.zeros(points) for _ in range(dim)]
        hi = [np.ones(points) for _ in range(dim)]
        active = np.arange(points)
        cdf = np.cumsum(measure.weights)
        for _ in range(depth):
            if active.size == 0:
                break
            sym = np.minimum(np.searchsorted(cdf, rng.random(active.size), side="right"), k - 1)
            diam = np.zeros(active.size)
            for c in range(dim):
                x[c][active] = _apply(coords[c], sym, x[c][active])
                lo[c][active] = _apply(coords[c], sym, lo[c][active])
                hi[c][active] = _apply(coords[c], sym, hi[c][active])
                diam = np.maximum(diam, np.abs(hi[c][active] - lo[c][active]))
            active = active[diam >= freeze]
        return np.column_stack(x)

    if not isinstance(measure, TableMeasure):
        raise TypeError(f"unsupported measure {type(measure).__name__}")
    words = np.empty((points, depth), dtype=np.int64)
    code = np.zeros(points, dtype=np.int64)
    parent = np.ones(points)
    for pos in range(depth):
        if pos < measure.depth:
            row = measure.levels[pos + 1]
            probs = row[(code[:, None] * k + np.arange(k)[None, :])] / parent[:, None]
        else:
            probs = np.broadcast_to(measure.fitted_weights, (points, k))
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(points)[:, None] * cdf[:, -1:]
        sym = np.minimum((u >= cdf).sum(axis=1), k - 1)
        words[:, pos] = sym
        if pos < measure.depth:
            code = code * k + sym
            parent = measure.levels[pos + 1][code]
    for pos in range(depth - 1, -1, -1):
        for c in range(dim):
            x[c] = _apply(coords[c], words[:, pos], x[c])
    return np.column_stack(x)


def chaos_game_chains(system, measure, points: int, chains: int = 65_536, burn_in: int = CHAOS_DEPTH,
                      seed=0, start=(0.5, 0.5)) -> np.ndarray:
    """Classical chaos game run as parallel Markov chains; shape (points, d).

    Each chain applies one random map per step and every state after
    ``burn_in`` steps is kept, so a sample costs one map evaluation instead
    of a full word.  Samples within a chain are correlated, which is harmless
    for pictures.  Only Bernoulli measures are supported.
    """
    if not isinstance(measure, BernoulliMeasure):
        raise TypeError("chained sampling needs a Bernoulli measure")
    rng = np.random.Generator(np.random.Philox(seed))
    coords = system.coordinates
    chains = max(1, min(chains, points))
    x = [np.full(chains, float(start[c])) for c in range(len(coords))]
    cdf = np.cumsum(measure.weights)
    k = system.n_symbols
    out = np.empty((points, len(coords)))
    filled, step = 0, 0
    while filled < points:
        sym = np.minimum(np.searchsorted(cdf, rng.random(chains), side="right"), k - 1)
        for c, coord in enumerate(coords):
            x[c] = _apply(coord, sym, x[c])
        step += 1
        if step > burn_in:
            take = min(chains, points - filled)
            out[filled:filled + take] = np.column_stack([v[:take] for v in x])
            filled += take
    return out


def cell_index(values: np.ndarray, delta: float) -> np.ndarray:
    """Mesh cell of each coordinate value; points on a boundary go to the lower cell."""
    return np.maximum(np.ceil(values / delta).astype(np.int64) - 1, 0)


def grid_moments_chaos(samples: np.ndarray, delta: float, qs) -> GridMoments:
    qs = np.asarray(qs, dtype=float)
    idx = cell_index(samples, delta)
    n_side = int(np.ceil(1.0 / delta)) + 2
    keys = idx[:, 0] if idx.shape[1] == 1 else idx[:, 0] * n_side + idx[:, 1]
    _, counts = np.unique(keys, return_counts=True)
    masses = counts / samples.shape[0]
    return GridMoments(delta, qs, _moments(masses, qs), "chaos_game", 0.0, int(counts.size), samples.shape[0])


# ------------------------------------------------------------------ slopes


@dataclass(frozen=True)
class TauFit:
    q: float
    slope: float
    residual: float
    intercept: float


def empirical_tau(moments: list[GridMoments], q: float) -> TauFit:
    """Least-squares slope of ``log D`` against ``-log delta``.

    Needs at least three strictly decreasing scales.  A constant moment
    sequence (``q = 1`` without truncation) yields slope 0.
    """
    if len(moments) < 3:
        raise ValueError("need at least three scales")
    deltas = np.array([m.delta for m in moments])
    if np.any(np.diff(deltas) >= 0):
        raise ValueError("scales must be strictly decreasing")
    d = np.array([m.at(q) for m in moments])
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("moment sums must be positive and finite")
    x = -np.log(deltas)
    y = np.log(d)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return TauFit(float(q), float(slope), resid, float(intercept))


# ------------------------------------------------------------------ parabolic trace


@dataclass
class LocalExponentTrace:
    depths: np.ndarray
    radii: np.ndarray
    exponents: np.ndarray
    symbol: int


def local_exponent_trace(system, measure, symbol: int, depths) -> LocalExponentTrace:
    """``log P[j^n] / log |h_j^n([0,1])|`` for the repeated word ``j^n``."""
    if system.is_carpet:
        raise TypeError("the local exponent trace is defined for Cantor systems")
    depths = np.asarray(sorted(int(n) for n in depths))
    if depths.size == 0 or depths[0] < 1:
        raise ValueError("depths must be positive")
    h = system.maps[symbol]
    ends = np.array([0.0, 1.0])
    done = 0
    radii, expo = [], []
    for n in depths:
        for _ in range(n - done):
            ends = np.clip(value_and_deriv(h, ends)[0], 0.0, 1.0)
        done = n
        r = abs(ends[1] - ends[0])
        logm = float(measure.log_mass_many(np.full((1, n), symbol))[0])
        radii.append(r)
        expo.append(logm / np.log(r))
    return LocalExponentTrace(depths, np.array(radii), np.array(expo), symbol)
