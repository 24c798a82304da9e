"""Vector helpers, straight particle paths and adaptive Gauss-Kronrod quadrature.

Everything here is a pure function of its arguments. Integrands may return
either a scalar or a fixed-shape array; array-valued integrands are integrated
component-wise on a shared set of panels, with the panel error measured in the
max-norm.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "IntegrandError",
    "QuadResult",
    "StraightPath",
    "vec3",
    "norm",
    "cross",
    "dot",
    "integrate_adaptive",
    "integrate_improper",
    "integrate_halfline",
    "integrate",
    "path_position",
]

DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-12
DEFAULT_MAX_EVALS = 1_000_000

# 15-point Kronrod rule with embedded 7-point Gauss rule on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144845693013,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


class IntegrandError(ArithmeticError):
    """Raised when an integrand returns NaN; carries the offending abscissa."""

    def __init__(self, abscissa: float):
        super().__init__(f"integrand returned NaN at x = {abscissa!r}")
        self.abscissa = abscissa


@dataclass(frozen=True)
class QuadResult:
    """Outcome of a numerical integration.

    ``value`` is a float for scalar integrands and an ndarray for array-valued
    ones; ``error_estimate`` is always a float (max-norm for arrays).
    """

    value: float | np.ndarray
    error_estimate: float
    evaluations: int
    converged: bool

    def __float__(self) -> float:
        return float(self.value)

    def scaled(self, factor: float) -> "QuadResult":
        return QuadResult(self.value * factor, abs(factor) * self.error_estimate,
                          self.evaluations, self.converged)

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(self.value + other.value,
                          self.error_estimate + other.error_estimate,
                          self.evaluations + other.evaluations,
                          self.converged and other.converged)


def vec3(x, y=None, z=None) -> np.ndarray:
    """Build a float 3-vector from three scalars or one length-3 sequence."""
    if y is None and z is None:
        v = np.asarray(x, dtype=float)
    else:
        v = np.array([x, y, z], dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def norm(v) -> float | np.ndarray:
    # hypot avoids the underflow of sqrt(sum(v**2)) for tiny components
    return np.hypot.reduce(np.asarray(v, dtype=float), axis=-1)


def cross(a, b) -> np.ndarray:
    return np.cross(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def dot(a, b) -> float | np.ndarray:
    return np.sum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float), axis=-1)


@dataclass(frozen=True)
class StraightPath:
    """Straight-line worldline ``start + speed * t * direction``.

    The start point is ``(impact_x, y_min, z_offset)``; when ``y_min`` is
    infinite the origin of time is placed at ``y = 0`` instead.
    """

    impact_x: float
    z_offset: float = 0.0
    speed: float = 1.0
    direction: tuple[float, float, float] = (0.0, 1.0, 0.0)
    y_range: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if not self.y_range[0] < self.y_range[1]:
            raise ValueError("y_range must satisfy y_min < y_max")

    @property
    def start(self) -> np.ndarray:
        y0 = self.y_range[0] if math.isfinite(self.y_range[0]) else 0.0
        return np.array([self.impact_x, y0, self.z_offset], dtype=float)

    def position(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.start + self.speed * t[..., None] * np.asarray(self.direction, dtype=float)

    def point_at_y(self, y) -> np.ndarray:
        """Positions on the path indexed by the y coordinate (paths along +y only)."""
        y = np.asarray(y, dtype=float)
        out = np.empty(y.shape + (3,))
        out[..., 0] = self.impact_x
        out[..., 1] = y
        out[..., 2] = self.z_offset
        return out


def path_position(p: StraightPath, t: float) -> np.ndarray:
    return p.position(t)


def _evaluate(f, x: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        fx = np.asarray(f(x), dtype=float)
        if fx.ndim == 0:
            fx = np.full(x.shape, float(fx))
    else:
        fx = np.array([np.asarray(f(float(xi)), dtype=float) for xi in x])
    if np.isnan(fx).any():
        bad = np.isnan(fx.reshape(len(x), -1)).any(axis=1)
        raise IntegrandError(float(x[np.argmax(bad)]))
    return fx


def _gk15(f, a: float, b: float, vectorized: bool):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = _evaluate(f, center + half * _XK, vectorized)
    kronrod = half * np.tensordot(_WK, fx, axes=1)
    gauss = half * np.tensordot(_WG, fx, axes=1)
    err = float(np.max(np.abs(kronrod - gauss)))
    return kronrod, err


def _magnitude(value) -> float:
    return float(np.max(np.abs(value)))


def integrate_adaptive(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    *,
    vectorized: bool = False,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> QuadResult:
    """Globally adaptive 15-point Gauss-Kronrod quadrature on a finite interval.

    The panel with the largest error estimate is bisected until the summed
    estimate is below ``max(rel_tol * |value|, abs_tol)`` or the evaluation
    budget is spent, in which case the best estimate is returned with
    ``converged=False``.

    Parameters
    ----------
    f : callable
        Integrand. With ``vectorized=True`` it receives a 1-D array of
        abscissae and returns values along the first axis.
    a, b : float
        Finite limits with ``a < b``.
    rel_tol, abs_tol : float
        Positive tolerances.
    """
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrate_adaptive needs finite limits; use integrate_improper")
    if not a < b:
        raise ValueError(f"expected a < b, got a={a}, b={b}")
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")

    value, err = _gk15(f, a, b, vectorized)
    evals = 15
    # heap entries: (-err, seq, lo, hi, value, err); seq keeps ordering deterministic
    heap = [(-err, 0, a, b, value, err)]
    frozen = []
    seq = 1
    total = value
    total_err = err
    while total_err > max(rel_tol * _magnitude(total), abs_tol) and heap:
        if evals + 30 > max_evals:
            break
        _, _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or (hi - lo) < 64 * np.finfo(float).eps * max(abs(lo), abs(hi), 1e-300):
            frozen.append((lo, hi, v, e))
            continue
        v1, e1 = _gk15(f, lo, mid, vectorized)
        v2, e2 = _gk15(f, mid, hi, vectorized)
        evals += 30
        total = total + (v1 + v2 - v)
        total_err += e1 + e2 - e
        heapq.heappush(heap, (-e1, seq, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, seq + 1, mid, hi, v2, e2))
        seq += 2

    panels = sorted([(lo, hi, v, e) for _, _, lo, hi, v, e in heap] + frozen, key=lambda p: p[0])
    if np.ndim(value) == 0:
        total = math.fsum(float(p[2]) for p in panels)
    else:
        stacked = np.array([p[2] for p in panels]).reshape(len(panels), -1)
        total = np.array([math.fsum(col) for col in stacked.T])
        total = total.reshape(np.shape(value))
    total_err = math.fsum(p[3] for p in panels)
    converged = total_err <= max(rel_tol * _magnitude(total), abs_tol)
    return QuadResult(total, total_err, evals, bool(converged))


def integrate_improper(
    f: Callable,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    *,
    scale: float = 1.0,
    vectorized: bool = False,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> QuadResult:
    """Integrate over the whole real line via ``y = scale * tan(u)``.

    The integrand must decay at least as ``|y|**-2``; the mapped integrand is
    then bounded at ``u = ±pi/2`` and the Gauss-Kronrod nodes never touch the
    endpoints. ``scale`` should be the length scale of the integrand's
    features (an impact parameter, say).
    """
    if scale <= 0:
        raise ValueError("scale must be positive")

    def mapped(u):
        u = np.asarray(u, dtype=float)
        c = np.cos(u)
        fx = _evaluate(f, scale * np.tan(u), vectorized)
        jac = scale / (c * c)
        return fx * jac.reshape(jac.shape + (1,) * (np.ndim(fx) - np.ndim(jac)))

    half_pi = 0.5 * math.pi
    return integrate_adaptive(mapped, -half_pi, half_pi, rel_tol, abs_tol,
                              vectorized=True, max_evals=max_evals)


def integrate_halfline(
    f: Callable,
    start: float = 0.0,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    *,
    scale: float = 1.0,
    direction: int = 1,
    vectorized: bool = False,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> QuadResult:
    """Integrate over ``[start, inf)`` (or ``(-inf, start]`` for ``direction=-1``)."""
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")

    def mapped(u):
        u = np.asarray(u, dtype=float)
        c = np.cos(u)
        fx = _evaluate(f, start + direction * scale * np.tan(u), vectorized)
        jac = scale / (c * c)
        return fx * jac.reshape(jac.shape + (1,) * (np.ndim(fx) - np.ndim(jac)))

    return integrate_adaptive(mapped, 0.0, 0.5 * math.pi, rel_tol, abs_tol,
                              vectorized=True, max_evals=max_evals)


def integrate(f: Callable, a: float, b: float, rel_tol: float = DEFAULT_REL_TOL,
              abs_tol: float = DEFAULT_ABS_TOL, **kwargs) -> QuadResult:
    """Dispatch to the finite, half-line or whole-line routine by the limits."""
    a, b = float(a), float(b)
    lo_inf, hi_inf = math.isinf(a), math.isinf(b)
    if lo_inf and hi_inf:
        if not (a < 0 < b):
            raise ValueError("infinite limits must be (-inf, inf)")
        return integrate_improper(f, rel_tol, abs_tol, **kwargs)
    if hi_inf:
        return integrate_halfline(f, a, rel_tol, abs_tol, direction=1, **kwargs)
    if lo_inf:
        return integrate_halfline(f, b, rel_tol, abs_tol, direction=-1, **kwargs)
    kwargs.pop("scale", None)
    return integrate_adaptive(f, a, b, rel_tol, abs_tol, **kwargs)
