"""C^{1+alpha} interval contractions with evaluable derivatives.

Every map acts on numpy arrays elementwise.  Derivatives are one-sided at
the endpoints of [0, 1] simply because the formulas are evaluated there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConvergenceError, DomainError

DOMAIN_SLACK = 1e-12


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < -DOMAIN_SLACK) or np.any(x > 1 + DOMAIN_SLACK):
        raise DomainError("argument outside [0, 1]")
    return np.clip(x, 0.0, 1.0)


def mp_invert_left(alpha: float, y, max_iter: int = 200):
    """Solve ``x + 2**alpha * x**(1 + alpha) = y`` for ``x`` in [0, 1/2].

    Newton's method started from ``min(y, 1/2)``.  The left-hand side is
    convex and increasing, so the iterates decrease monotonically onto the
    root; a bisection step is taken whenever a Newton step leaves the
    bracket.  Residuals come out below 1e-14.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    y = np.asarray(y, dtype=float)
    shape = y.shape
    y = y.ravel()
    c = 2.0 ** alpha
    lo = np.zeros_like(y)
    hi = np.minimum(y, 0.5)
    x = hi.copy()
    active = np.ones(y.shape, dtype=bool)
    for _ in range(max_iter):
        xa = x[active]
        ya = y[active]
        f = xa + c * xa ** (1 + alpha) - ya
        df = 1 + (1 + alpha) * c * xa ** alpha
        # root lies in [lo, hi]; keep the bracket tight
        pos = f > 0
        hia = np.where(pos, xa, hi[active])
        loa = np.where(pos, lo[active], xa)
        step = xa - f / df
        bad = (step < loa) | (step > hia)
        step = np.where(bad, 0.5 * (loa + hia), step)
        done = (np.abs(step - xa) <= 4e-16 * xa) | (np.abs(f) <= 1e-17) | (hia - loa <= 4e-16 * hia)
        x[active] = step
        hi[active] = hia
        lo[active] = loa
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            break
    else:
        raise ConvergenceError("Manneville-Pomeau inversion did not converge")
    return x.reshape(shape) if shape else x[0]


class ContractionMap:
    """Base class for interval contractions.

    Subclasses implement ``_value`` and ``_deriv`` on arrays already clipped
    to [0, 1].
    """

    holder_exponent: float = 1.0
    parabolic_point: float | None = None
    is_affine: bool = False

    def __call__(self, x):
        return self._value(_check_domain(x))

    def deriv(self, x):
        return self._deriv(_check_domain(x))

    # unchecked variants for hot loops whose inputs are images of [0, 1]
    def _value(self, x):
        raise NotImplementedError

    def _deriv(self, x):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def same_as(self, other: "ContractionMap", samples: int = 33, atol: float = 1e-10) -> bool:
        xs = np.linspace(0.0, 1.0, samples)
        return bool(np.all(np.abs(self._value(xs) - other._value(xs)) <= atol))


@dataclass(frozen=True, eq=False)
class Affine(ContractionMap):
    slope: float
    offset: float

    is_affine = True

    def _value(self, x):
        return self.slope * x + self.offset

    def _deriv(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.slope)

    def to_dict(self):
        return {"kind": "affine", "slope": self.slope, "offset": self.offset}


@dataclass(frozen=True, eq=False)
class MPInverseBranch(ContractionMap):
    """Inverse branch of the Manneville-Pomeau map.

    The forward map is ``x + 2**alpha x**(1+alpha)`` on [0, 1/2] and
    ``2x - 1`` on (1/2, 1].  The left branch has a parabolic fixed point at
    0; the right branch is ``y -> (y + 1)/2``.
    """

    alpha: float
    branch: str = "left"
    declared_parabolic: float | None = field(default=None)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.branch not in ("left", "right"):
            raise ValueError("branch must be 'left' or 'right'")

    @property
    def is_affine(self):
        return self.branch == "right"

    @property
    def holder_exponent(self):
        return self.alpha if self.branch == "left" else 1.0

    @property
    def parabolic_point(self):
        if self.declared_parabolic is not None:
            return self.declared_parabolic
        return 0.0 if self.branch == "left" else None

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0.5, x + 2 ** self.alpha * np.abs(x) ** (1 + self.alpha), 2 * x - 1)

    def _value(self, y):
        if self.branch == "right":
            return 0.5 * (y + 1.0)
        return mp_invert_left(self.alpha, y)

    def _deriv(self, y):
        if self.branch == "right":
            return np.full_like(np.asarray(y, dtype=float), 0.5)
        x = mp_invert_left(self.alpha, y)
        return 1.0 / (1.0 + (1 + self.alpha) * 2 ** self.alpha * x ** self.alpha)

    def _value_deriv(self, y):
        if self.branch == "right":
            return 0.5 * (y + 1.0), np.full_like(np.asarray(y, dtype=float), 0.5)
        x = mp_invert_left(self.alpha, y)
        return x, 1.0 / (1.0 + (1 + self.alpha) * 2 ** self.alpha * x ** self.alpha)

    def to_dict(self):
        d = {"kind": "mp_inverse", "alpha": self.alpha, "branch": self.branch}
        if self.parabolic_point is not None:
            d["parabolic_point"] = self.parabolic_point
        return d


@dataclass(frozen=True, eq=False)
class SqrtMap(ContractionMap):
    """``x -> (sqrt(1 + 8x) - 1)/4``: C^2, parabolic at 0, image [0, 1/2]."""

    parabolic_point: float | None = 0.0

    def _value(self, x):
        return (np.sqrt(1.0 + 8.0 * x) - 1.0) / 4.0

    def _deriv(self, x):
        return 1.0 / np.sqrt(1.0 + 8.0 * x)

    def to_dict(self):
        d = {"kind": "sqrt"}
        if self.parabolic_point is not None:
            d["parabolic_point"] = self.parabolic_point
        return d


@dataclass(frozen=True, eq=False)
class Reflected(ContractionMap):
    """Conjugate of ``inner`` by ``x -> 1 - x``."""

    inner: ContractionMap

    @property
    def is_affine(self):
        return self.inner.is_affine

    @property
    def holder_exponent(self):
        return self.inner.holder_exponent

    @property
    def parabolic_point(self):
        p = self.inner.parabolic_point
        return None if p is None else 1.0 - p

    def _value(self, x):
        return 1.0 - self.inner._value(1.0 - x)

    def _deriv(self, x):
        return self.inner._deriv(1.0 - x)

    def to_dict(self):
        return {"kind": "reflect", "map": self.inner.to_dict()}


@dataclass(frozen=True, eq=False)
class TableMap(ContractionMap):
    """Monotone piecewise-cubic interpolant through user knots.

    Alternatively built from callables with :meth:`from_callables`, in which
    case it cannot be serialised.
    """

    xs: tuple[float, ...] = ()
    ys: tuple[float, ...] = ()
    parabolic_point: float | None = None
    holder_exponent: float = 1.0
    func: Callable | None = field(default=None, repr=False)
    dfunc: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.func is None:
            xs = np.asarray(self.xs, dtype=float)
            ys = np.asarray(self.ys, dtype=float)
            if xs.size < 2 or xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
                raise ValueError("table knots must increase strictly from 0 to 1")
            if np.any(np.diff(ys) == 0) or not (np.all(np.diff(ys) > 0) or np.all(np.diff(ys) < 0)):
                raise ValueError("table values must be strictly monotone")
            interp = PchipInterpolator(xs, ys)
            object.__setattr__(self, "func", interp)
            object.__setattr__(self, "dfunc", interp.derivative())

    @classmethod
    def from_callables(cls, func, dfunc, parabolic_point=None, holder_exponent=1.0):
        return cls(parabolic_point=parabolic_point, holder_exponent=holder_exponent, func=func, dfunc=dfunc)

    def _value(self, x):
        return np.asarray(self.func(x), dtype=float)

    def _deriv(self, x):
        return np.asarray(self.dfunc(x), dtype=float)

    def to_dict(self):
        if not self.xs:
            raise ValueError("callable-backed TableMap cannot be serialised")
        d = {"kind": "table", "x": list(self.xs), "y": list(self.ys)}
        if self.parabolic_point is not None:
            d["parabolic_point"] = self.parabolic_point
        return d


def value_and_deriv(h: ContractionMap, x):
    """Evaluate ``h`` and ``h'`` at points already known to lie in [0, 1]."""
    if hasattr(h, "_value_deriv"):
        return h._value_deriv(x)
    return h._value(x), h._deriv(x)


def evaluate(h: ContractionMap, x):
    return h(x)


def deriv(h: ContractionMap, x):
    return h.deriv(x)


def compose_eval(maps: Sequence[ContractionMap], x):
    """Value and derivative of ``maps[0] o ... o maps[-1]`` at ``x``.

    The derivative is the chain-rule product along the orbit, accumulated
    from the innermost map outward.
    """
    if not maps:
        raise ValueError("need at least one map")
    x = _check_domain(x)
    d = np.ones_like(x)
    for h in reversed(maps):
        v, dv = value_and_deriv(h, x)
        d = d * dv
        x = np.clip(v, 0.0, 1.0)
    return x, d


@dataclass(frozen=True)
class DerivBounds:
    lower: float
    upper: float
    interval: tuple[float, float]
    refinement_level: int
    observed_min: float = 0.0
    observed_max: float = 0.0

    @property
    def distortion(self) -> float:
        """Observed sup/inf ratio of the composed derivative."""
        return self.observed_max / self.observed_min


def _refine(fn, a, b, grid, refinements, pick):
    xs = np.linspace(a, b, grid + 1)
    ds = fn(xs)
    k = int(pick(ds))
    best = ds[k]
    omega = 0.0
    for _ in range(refinements):
        lo = xs[max(k - 1, 0)]
        hi = xs[min(k + 1, len(xs) - 1)]
        if hi <= lo:
            break
        xs = np.linspace(lo, hi, grid + 1)
        ds = fn(xs)
        k = int(pick(ds))
        if pick(np.array([best, ds[k]])) == 1:
            best = ds[k]
    nbrs = [ds[j] for j in (k - 1, k + 1) if 0 <= j < len(ds)]
    if nbrs:
        omega = max(abs(ds[k] - v) for v in nbrs)
    return best, omega


def derivative_range(maps: Sequence[ContractionMap], domain: tuple[float, float] = (0.0, 1.0),
                     grid: int = 64, refinements: int = 2, eps_range: float = 1e-3) -> DerivBounds:
    """Bracket ``|(h_1 o ... o h_n)'|`` over ``domain`` by adaptive sampling.

    The derivative is sampled on ``grid + 1`` uniform points, then the
    window around the running maximum (resp. minimum) is resampled
    ``refinements`` times.  The observed extremes are widened by the local
    modulus (largest jump to a neighbouring sample), capped at a relative
    ``eps_range``; constant derivatives are therefore bracketed exactly.
    """
    if grid < 3:
        raise ValueError("grid must be at least 3")
    a, b = float(domain[0]), float(domain[1])

    def absderiv(xs):
        return np.abs(compose_eval(maps, xs)[1])

    dmax, wmax = _refine(absderiv, a, b, grid, refinements, np.argmax)
    dmin, wmin = _refine(absderiv, a, b, grid, refinements, np.argmin)
    upper = dmax + min(wmax, eps_range * dmax)
    if dmax <= 1.0:
        upper = min(upper, 1.0)
    lower = dmin - min(wmin, eps_range * dmin)
    return DerivBounds(lower=float(lower), upper=float(upper), interval=(a, b),
                       refinement_level=refinements, observed_min=float(dmin), observed_max=float(dmax))


def distortion_ratio(maps: Sequence[ContractionMap], grid: int = 64) -> float:
    """Largest observed ``|h'(x)/h'(y)|`` for the composed word."""
    b = derivative_range(maps, grid=grid)
    return b.observed_max / b.observed_min
