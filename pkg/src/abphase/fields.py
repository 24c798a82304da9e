"""Closed-form field kernels in Gaussian natural units (c = 1).

The low-level kernels (``dipole_field``, ``dipole_potential``,
``coulomb_field``) take displacement arrays of shape ``(..., 3)`` and
broadcast, so lattice sums can evaluate many source/field-point pairs at once.
The object-level functions wrap them for single sources.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SINGULAR_DISTANCE",
    "SingularityError",
    "InteriorEvaluationError",
    "MagneticDipole",
    "MovingCharge",
    "FluxString",
    "dipole_field",
    "dipole_potential",
    "coulomb_field",
    "dipole_B",
    "dipole_A",
    "charge_E",
    "charge_B",
    "moving_dipole_E",
    "fluxstring_A",
]

SINGULAR_DISTANCE = 1e-9
MAX_SPEED = 0.1


class SingularityError(ValueError):
    """Field requested within ``SINGULAR_DISTANCE`` of a point source."""


class InteriorEvaluationError(ValueError):
    """Flux-string potential requested inside the magnet's radius."""


def _as_vec(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class MagneticDipole:
    moment: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        moment = _as_vec(self.moment)
        if not np.all(np.isfinite(moment)):
            raise ValueError("dipole moment must be finite")
        object.__setattr__(self, "moment", moment)
        object.__setattr__(self, "position", _as_vec(self.position))


@dataclass(frozen=True)
class MovingCharge:
    """Point charge with a nonrelativistic velocity (``|v| < 0.1``).

    The electron carries ``charge = -|e|``; signs are never folded away.
    """

    charge: float
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        velocity = _as_vec(self.velocity)
        if np.linalg.norm(velocity) >= MAX_SPEED:
            raise ValueError(f"|velocity| must be below {MAX_SPEED} (nonrelativistic)")
        object.__setattr__(self, "velocity", velocity)
        object.__setattr__(self, "position", _as_vec(self.position))


@dataclass(frozen=True)
class FluxString:
    """Infinitely long magnet along the z axis, seen from outside its radius."""

    radius: float
    flux: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")


def _distance(s: np.ndarray) -> np.ndarray:
    dist = np.sqrt(np.sum(s * s, axis=-1))
    if np.any(dist < SINGULAR_DISTANCE):
        raise SingularityError("field evaluated at a point source")
    return dist


def dipole_field(moment, s) -> np.ndarray:
    """B = [3 (m.s) s - s^2 m] / s^5 for displacement(s) ``s`` from the dipole."""
    s = np.asarray(s, dtype=float)
    moment = np.asarray(moment, dtype=float)
    dist = _distance(s)[..., None]
    m_dot_s = np.sum(moment * s, axis=-1)[..., None]
    return (3.0 * m_dot_s * s - dist * dist * moment) / dist**5


def dipole_potential(moment, s) -> np.ndarray:
    """A = m x s / s^3."""
    s = np.asarray(s, dtype=float)
    dist = _distance(s)[..., None]
    return np.cross(np.asarray(moment, dtype=float), s) / dist**3


def coulomb_field(charge, s) -> np.ndarray:
    """E = q s / s^3."""
    s = np.asarray(s, dtype=float)
    dist = _distance(s)[..., None]
    return float(charge) * s / dist**3


def dipole_B(d: MagneticDipole, r) -> np.ndarray:
    return dipole_field(d.moment, np.asarray(r, dtype=float) - d.position)


def dipole_A(d: MagneticDipole, r) -> np.ndarray:
    return dipole_potential(d.moment, np.asarray(r, dtype=float) - d.position)


def charge_E(c: MovingCharge, r) -> np.ndarray:
    # O(v^0): the Coulomb field of the instantaneous position
    return coulomb_field(c.charge, np.asarray(r, dtype=float) - c.position)


def charge_B(c: MovingCharge, r) -> np.ndarray:
    """Magnetic field of a slow charge, ``B = v x E``."""
    return np.cross(c.velocity, charge_E(c, r))


def moving_dipole_E(d: MagneticDipole, v, r) -> np.ndarray:
    """Electric field of a slowly moving magnetic dipole, ``E = -v x B``."""
    return -np.cross(np.asarray(v, dtype=float), dipole_B(d, r))


def fluxstring_A(s: FluxString, r) -> np.ndarray:
    """Azimuthal exterior potential ``A_phi = flux / (2 pi rho)``.

    Raises
    ------
    InteriorEvaluationError
        If any point has cylindrical radius ``rho <= s.radius``.
    """
    r = np.asarray(r, dtype=float)
    rho2 = r[..., 0] ** 2 + r[..., 1] ** 2
    if np.any(rho2 <= s.radius**2):
        raise InteriorEvaluationError("flux-string potential is only defined outside the magnet")
    coeff = s.flux / (2.0 * math.pi * rho2)
    out = np.zeros(r.shape)
    out[..., 0] = -r[..., 1] * coeff
    out[..., 1] = r[..., 0] * coeff
    return out
