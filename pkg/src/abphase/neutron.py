"""Polarized neutron in a spatially uniform, time-dependent solenoid field.

Two calculations live here: the field-dependent part of the neutron's action,
``integral(m B(t) dt)``, and the EMF the moving neutron induces around a
truncated solenoid surface. The kinetic term ``m v^2 / 2`` is independent of
B and is left out of the phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .fields import SINGULAR_DISTANCE, SingularityError, dipole_field
from .numerics import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, QuadResult, integrate_adaptive

__all__ = [
    "ConstantProfile",
    "SinusoidProfile",
    "GaussianProfile",
    "TableProfile",
    "make_profile",
    "PROFILES",
    "NeutronRun",
    "neutron_phase",
    "EMFCheck",
    "GaussCheck",
    "emf_on_solenoid",
    "emf_gauss_check",
    "closed_surface_flux",
]

DEFAULT_N_PHI = 64


@dataclass(frozen=True)
class ConstantProfile:
    amplitude: float = 1.0
    breakpoints: tuple = ()

    def __call__(self, t):
        return np.full(np.shape(t), float(self.amplitude))


@dataclass(frozen=True)
class SinusoidProfile:
    amplitude: float = 1.0
    period: float = 1.0
    phase: float = 0.0
    breakpoints: tuple = ()

    def __call__(self, t):
        return self.amplitude * np.sin(2.0 * math.pi * np.asarray(t, dtype=float) / self.period + self.phase)


@dataclass(frozen=True)
class GaussianProfile:
    amplitude: float = 1.0
    tau: float = 1.0
    center: float = 0.0
    breakpoints: tuple = ()

    def __call__(self, t):
        u = (np.asarray(t, dtype=float) - self.center) / self.tau
        return self.amplitude * np.exp(-u * u)


@dataclass(frozen=True)
class TableProfile:
    """Piecewise-linear B(t) through the given knots, held constant outside them."""

    times: tuple
    values: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2 or len(t) != len(self.values):
            raise ValueError("table profile needs matching times/values with at least two knots")
        if np.any(np.diff(t) <= 0):
            raise ValueError("table times must be strictly increasing")

    @property
    def breakpoints(self) -> tuple:
        return tuple(self.times)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


PROFILES: dict[str, type] = {
    "constant": ConstantProfile,
    "sinusoid": SinusoidProfile,
    "gaussian": GaussianProfile,
    "table": TableProfile,
}


def make_profile(name: str, **params) -> Callable:
    try:
        cls = PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown field profile {name!r}; choose from {sorted(PROFILES)}") from None
    if cls is TableProfile:
        return TableProfile(tuple(params["times"]), tuple(params["values"]))
    return cls(**params)


@dataclass(frozen=True)
class NeutronRun:
    moment: float
    speed: float
    field_profile: Callable
    duration: tuple[float, float]

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        t0, t1 = self.duration
        if not (math.isfinite(t0) and math.isfinite(t1) and t0 < t1):
            raise ValueError("duration must be a finite interval t0 < t1")


def neutron_phase(run: NeutronRun, rel_tol: float = DEFAULT_REL_TOL,
                  abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """Accumulated phase ``integral(m B(t) dt)`` over the run.

    Kinks of tabulated profiles are used as panel boundaries.
    """
    t0, t1 = run.duration
    knots = [t for t in getattr(run.field_profile, "breakpoints", ()) if t0 < t < t1]
    edges = [t0, *sorted(knots), t1]
    total = QuadResult(0.0, 0.0, 0, True)
    for lo, hi in zip(edges[:-1], edges[1:]):
        total = total + integrate_adaptive(run.field_profile, lo, hi, rel_tol, abs_tol, vectorized=True)
    return total.scaled(run.moment)


@dataclass(frozen=True)
class EMFCheck:
    """Neutron near a solenoid surface ``rho = solenoid_radius``, ``|z| <= half_length``."""

    solenoid_radius: float
    half_length: float
    neutron_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    neutron_moment: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    neutron_velocity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.01]))

    def __post_init__(self):
        if not (self.solenoid_radius > 0 and self.half_length > 0):
            raise ValueError("solenoid_radius and half_length must be positive")
        for name in ("neutron_position", "neutron_moment", "neutron_velocity"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        v = self.neutron_velocity
        if np.any(v[:2] != 0):
            raise ValueError("neutron velocity must be parallel to the solenoid axis")
        x, y, z = self.neutron_position
        if abs(math.hypot(x, y) - self.solenoid_radius) < SINGULAR_DISTANCE and abs(z) <= self.half_length:
            raise SingularityError("neutron sits on the integration surface")

    @property
    def speed(self) -> float:
        return float(self.neutron_velocity[2])


class GaussCheck(NamedTuple):
    surface_E: float
    surface_Br: float
    scale: float


def _surface_grid(chk: EMFCheck, z: np.ndarray, n_phi: int):
    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    c, s = np.cos(phi), np.sin(phi)
    pts = np.empty((len(z), n_phi, 3))
    pts[..., 0] = chk.solenoid_radius * c
    pts[..., 1] = chk.solenoid_radius * s
    pts[..., 2] = z[:, None]
    b = dipole_field(chk.neutron_moment, pts - chk.neutron_position)
    return b, c, s


def _side_integrand(chk: EMFCheck, n_phi: int):
    """Per-z integrand columns: E_phi, -v B_r and v |B_r|, each summed over phi."""
    weight = chk.solenoid_radius * 2.0 * math.pi / n_phi

    def integrand(z):
        b, c, s = _surface_grid(chk, z, n_phi)
        e = -np.cross(chk.neutron_velocity, b)
        e_phi = -e[..., 0] * s + e[..., 1] * c
        b_r = b[..., 0] * c + b[..., 1] * s
        v = chk.speed
        return weight * np.stack([e_phi.sum(axis=1), -v * b_r.sum(axis=1),
                                  abs(v) * np.abs(b_r).sum(axis=1)], axis=-1)

    return integrand


def emf_on_solenoid(chk: EMFCheck, n_phi: int = DEFAULT_N_PHI, rel_tol: float = DEFAULT_REL_TOL,
                    abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """Surface integral of the moving neutron's ``E_phi`` over the truncated cylinder.

    Periodic midpoint rule in phi, adaptive Gauss-Kronrod in z.
    """
    weight = chk.solenoid_radius * 2.0 * math.pi / n_phi

    def integrand(z):
        b, c, s = _surface_grid(chk, z, n_phi)
        e = -np.cross(chk.neutron_velocity, b)
        return weight * (-e[..., 0] * s + e[..., 1] * c).sum(axis=1)

    L = chk.half_length
    return integrate_adaptive(integrand, -L, L, rel_tol, abs_tol, vectorized=True)


def emf_gauss_check(chk: EMFCheck, n_phi: int = DEFAULT_N_PHI, rel_tol: float = DEFAULT_REL_TOL,
                    abs_tol: float = DEFAULT_ABS_TOL) -> GaussCheck:
    """``integral(E_phi ds)`` and ``-v integral(B_r ds)`` on shared quadrature nodes.

    ``scale`` is ``|v| integral(|B_r| ds)``, the size of the integrand before
    cancellation.
    """
    L = chk.half_length
    res = integrate_adaptive(_side_integrand(chk, n_phi), -L, L, rel_tol, abs_tol, vectorized=True)
    e_phi, minus_v_br, scale = (float(x) for x in res.value)
    return GaussCheck(e_phi, minus_v_br, scale)


def closed_surface_flux(chk: EMFCheck, n_phi: int = DEFAULT_N_PHI, rel_tol: float = DEFAULT_REL_TOL,
                        abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """Outward flux of the neutron's B through the side plus both end caps."""
    R, L = chk.solenoid_radius, chk.half_length
    weight = R * 2.0 * math.pi / n_phi

    def side(z):
        b, c, s = _surface_grid(chk, z, n_phi)
        return weight * (b[..., 0] * c + b[..., 1] * s).sum(axis=1)

    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)

    def caps(rho):
        pts = np.empty((len(rho), n_phi, 2, 3))
        pts[..., 0] = (rho[:, None] * np.cos(phi))[..., None]
        pts[..., 1] = (rho[:, None] * np.sin(phi))[..., None]
        pts[..., 2] = np.array([L, -L])
        bz = dipole_field(chk.neutron_moment, pts - chk.neutron_position)[..., 2]
        # outward normals: +z on top, -z on the bottom
        return rho * (2.0 * math.pi / n_phi) * (bz[..., 0] - bz[..., 1]).sum(axis=1)

    return (integrate_adaptive(side, -L, L, rel_tol, abs_tol, vectorized=True)
            + integrate_adaptive(caps, 0.0, R, rel_tol, abs_tol, vectorized=True))
