"""Classical stand-in for the magnet: a solenoid whose current is carried by a
frictionless charged liquid.

The passing electron's magnetic field does work on the liquid. The liquid's
kinetic-energy change ``delta_W`` enters the action with the opposite sign to
the electron's ``e v.A`` term and cancels it exactly.

Orientation: for ``current_density > 0`` the current circulates in +phi and
the flux points along +z. The electron moves along +y on the line ``x = a``.
With these conventions ``delta_I1 = e flux / 2`` and
``delta_W = -2 pi R^2 a v e j / (a^2 + y^2)``, and the two action
contributions sum to zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .ab_scenario import ABGeometry, action_along_path
from .fields import FluxString
from .numerics import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, QuadResult, integrate_improper

__all__ = [
    "THIN_RATIO",
    "ThinSolenoidWarning",
    "ClassicalSolenoid",
    "CancellationReport",
    "flux",
    "delta_I1",
    "electron_Bz_at",
    "delta_W_thin",
    "delta_W_numeric",
    "delta_I2",
    "cancellation",
    "shell_decomposition",
    "thick_solenoid_flux",
    "thick_solenoid_delta_I2",
]

THIN_RATIO = 0.05


class ThinSolenoidWarning(UserWarning):
    """Closed-form thin-solenoid route used with radius/impact above THIN_RATIO."""


@dataclass(frozen=True)
class ClassicalSolenoid:
    radius: float
    current_density: float
    liquid_mass: float = 1.0
    initial_speed: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.liquid_mass > 0:
            raise ValueError("liquid_mass must be positive")

    def flux(self) -> float:
        return 4.0 * math.pi**2 * self.radius**2 * self.current_density

    @classmethod
    def from_flux(cls, radius: float, flux: float, **kwargs) -> "ClassicalSolenoid":
        return cls(radius, flux / (4.0 * math.pi**2 * radius**2), **kwargs)


@dataclass(frozen=True)
class CancellationReport:
    delta_I1: float
    delta_I2: float
    total: float
    flux: float
    error_estimate: float = 0.0


def flux(s: ClassicalSolenoid) -> float:
    return s.flux()


def _check_geometry(s: ClassicalSolenoid, g: ABGeometry) -> None:
    if not g.impact > s.radius:
        raise ValueError("electron path must pass outside the solenoid")
    if s.radius / g.impact > THIN_RATIO:
        warnings.warn(
            f"radius/impact = {s.radius / g.impact:.3g} exceeds the thin-solenoid ratio {THIN_RATIO}",
            ThinSolenoidWarning, stacklevel=3)


def delta_I1(s: ClassicalSolenoid, g: ABGeometry, rel_tol: float = DEFAULT_REL_TOL,
             abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """Electron's ``e v.A`` action on the right-hand path; the device replaces the magnet."""
    if not g.impact > s.radius:
        raise ValueError("electron path must pass outside the solenoid")
    device_geometry = replace(g, magnet=FluxString(s.radius, s.flux()))
    return action_along_path(device_geometry, "right", rel_tol, abs_tol)


def electron_Bz_at(y_rel, z, g: ABGeometry):
    """z-component of the electron's field on the solenoid axis.

    The electron sits at ``(a, y_rel, 0)`` relative to the axis point
    ``(0, 0, z)`` and moves with speed ``v`` along +y.
    """
    y_rel = np.asarray(y_rel, dtype=float)
    z = np.asarray(z, dtype=float)
    r2 = g.impact**2 + y_rel**2 + z**2
    if np.any(r2 == 0.0):
        raise ZeroDivisionError("electron coincides with the field point")
    return g.speed * g.impact * g.charge / r2**1.5


def delta_W_thin(s: ClassicalSolenoid, g: ABGeometry, y):
    """Power-integrated energy change of the liquid with the electron at ``y``."""
    y = np.asarray(y, dtype=float)
    a = g.impact
    return -2.0 * math.pi * s.radius**2 * a * g.speed * g.charge * s.current_density / (a**2 + y**2)


def delta_W_numeric(s: ClassicalSolenoid, g: ABGeometry, y: float,
                    rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """``-j * pi R^2 * integral(B_z dz)`` with B_z uniform over each thin cross-section."""
    scale = math.hypot(g.impact, y)
    res = integrate_improper(lambda z: electron_Bz_at(y, z, g), rel_tol, abs_tol,
                             scale=scale, vectorized=True)
    return res.scaled(-s.current_density * math.pi * s.radius**2)


def delta_I2(s: ClassicalSolenoid, g: ABGeometry, rel_tol: float = DEFAULT_REL_TOL,
             abs_tol: float = DEFAULT_ABS_TOL, route: str = "closed") -> QuadResult:
    """Time integral of the liquid's energy change, using ``v dt = dy``.

    ``route="closed"`` integrates the closed-form ``delta_W``;
    ``route="numeric"`` nests the z-quadrature of ``B_z`` inside.
    """
    _check_geometry(s, g)
    if route == "closed":
        res = integrate_improper(lambda y: delta_W_thin(s, g, y), rel_tol, abs_tol,
                                 scale=g.impact, vectorized=True)
    elif route == "numeric":
        evals = 0

        def inner(y):
            nonlocal evals
            r = delta_W_numeric(s, g, y, rel_tol * 1e-2, abs_tol * 1e-2)
            evals += r.evaluations
            return r.value

        res = integrate_improper(inner, rel_tol, abs_tol, scale=g.impact)
        res = replace(res, evaluations=res.evaluations + evals)
    else:
        raise ValueError(f"unknown route {route!r}")
    return res.scaled(1.0 / g.speed)


def cancellation(s: ClassicalSolenoid, g: ABGeometry, rel_tol: float = DEFAULT_REL_TOL,
                 abs_tol: float = DEFAULT_ABS_TOL) -> CancellationReport:
    one = delta_I1(s, g, rel_tol, abs_tol)
    two = delta_I2(s, g, rel_tol, abs_tol)
    return CancellationReport(float(one.value), float(two.value), float(one.value + two.value),
                              s.flux(), one.error_estimate + two.error_estimate)


def shell_decomposition(s: ClassicalSolenoid, n_shells: int) -> list[ClassicalSolenoid]:
    """Concentric thin shells at radii ``R k / n`` (k = 1..n), each carrying ``j / n``."""
    if n_shells < 1:
        raise ValueError("n_shells must be at least 1")
    j_k = s.current_density / n_shells
    return [ClassicalSolenoid(s.radius * (k + 1) / n_shells, j_k, s.liquid_mass, s.initial_speed)
            for k in range(n_shells)]


def thick_solenoid_flux(s: ClassicalSolenoid, n_shells: int) -> float:
    return math.fsum(shell.flux() for shell in shell_decomposition(s, n_shells))


def thick_solenoid_delta_I2(s: ClassicalSolenoid, g: ABGeometry, n_shells: int,
                            rel_tol: float = DEFAULT_REL_TOL,
                            abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """Superpose the thin-shell result over a shell decomposition of ``s``."""
    if not g.impact > s.radius:
        raise ValueError("electron path must pass outside the solenoid")
    total = QuadResult(0.0, 0.0, 0, True)
    with warnings.catch_warnings():
        # this is the thick-solenoid route, so the thin-regime warning does not apply
        warnings.simplefilter("ignore", ThinSolenoidWarning)
        for shell in shell_decomposition(s, n_shells):
            total = total + delta_I2(shell, g, rel_tol, abs_tol)
    return total
