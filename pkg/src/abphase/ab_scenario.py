"""Magnetic Aharonov-Bohm set-up: two straight electron paths passing either
side of a long magnet along the z axis.

Actions are in units of hbar, so every ``delta_I`` is directly a phase in
radians. The electron moves along +y, and ``v dt = dy`` turns each time
integral of ``e v.A`` into ``e * integral(A_y dy)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .fields import (
    FluxString,
    MagneticDipole,
    MovingCharge,
    charge_B,
    coulomb_field,
    dipole_A,
    dipole_potential,
    fluxstring_A,
)
from .numerics import (
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    QuadResult,
    StraightPath,
    integrate,
    integrate_adaptive,
    integrate_halfline,
)

__all__ = [
    "ABGeometry",
    "ActionMethod",
    "ActionReport",
    "ClearanceError",
    "DipoleLattice",
    "InertnessBound",
    "action_along_path",
    "ab_action_difference",
    "line_integral",
    "action_along_polyline",
    "interference_pattern",
    "fringe_shift",
    "pair_identity_check",
    "build_lattice",
    "interaction_potential_picture",
    "interaction_field_picture",
    "lattice_action_potential_picture",
    "lattice_action_field_picture",
    "inertness_bound",
]

SIDES = ("left", "right")
LATTICE_RANGE_FACTOR = 10.0
CLEARANCE_FACTOR = 10.0


class ClearanceError(ValueError):
    """Electron path passes too close to the point dipoles of a lattice."""


class ActionMethod(str, Enum):
    FLUX_STRING = "flux_string"
    LATTICE_POTENTIAL_PICTURE = "lattice_potential_picture"
    LATTICE_FIELD_PICTURE = "lattice_field_picture"


@dataclass(frozen=True)
class ABGeometry:
    """Paths ``x = -impact`` (left) and ``x = +impact`` (right) in the z = 0 plane."""

    magnet: FluxString = field(default_factory=lambda: FluxString(0.1, 2 * math.pi))
    impact: float = 1.0
    y_start: float = -math.inf
    y_end: float = math.inf
    speed: float = 0.01
    charge: float = -1.0

    def __post_init__(self):
        if not self.impact > self.magnet.radius:
            raise ValueError("impact parameter must exceed the magnet radius")
        if not self.y_start < 0 < self.y_end:
            raise ValueError("need y_start < 0 < y_end")
        if not 0 < self.speed < 0.1:
            raise ValueError("speed must lie in (0, 0.1)")

    def path(self, side: str) -> StraightPath:
        if side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {side!r}")
        x = self.impact if side == "right" else -self.impact
        return StraightPath(impact_x=x, speed=self.speed, y_range=(self.y_start, self.y_end))

    @property
    def expected_delta_I(self) -> float:
        return self.charge * self.magnet.flux


@dataclass(frozen=True)
class ActionReport:
    delta_I: float
    left: QuadResult
    right: QuadResult
    method: ActionMethod

    @property
    def per_path(self) -> tuple[QuadResult, QuadResult]:
        return self.left, self.right

    @property
    def error_estimate(self) -> float:
        return self.left.error_estimate + self.right.error_estimate

    @property
    def converged(self) -> bool:
        return self.left.converged and self.right.converged


def action_along_path(g: ABGeometry, side: str, rel_tol: float = DEFAULT_REL_TOL,
                      abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """``e * integral(A_y dy)`` along one straight path past the flux string."""
    path = g.path(side)

    def integrand(y):
        return fluxstring_A(g.magnet, path.point_at_y(y))[..., 1]

    res = integrate(integrand, g.y_start, g.y_end, rel_tol, abs_tol,
                    vectorized=True, scale=g.impact)
    return res.scaled(g.charge)


def ab_action_difference(g: ABGeometry, rel_tol: float = DEFAULT_REL_TOL,
                         abs_tol: float = DEFAULT_ABS_TOL) -> ActionReport:
    left = action_along_path(g, "left", rel_tol, abs_tol)
    right = action_along_path(g, "right", rel_tol, abs_tol)
    return ActionReport(float(right.value - left.value), left, right, ActionMethod.FLUX_STRING)


def line_integral(
    vector_field: Callable[[np.ndarray], np.ndarray],
    vertices: Sequence,
    *,
    closed: bool = False,
    ray_in: Sequence[float] | None = None,
    ray_out: Sequence[float] | None = None,
    scale: float = 1.0,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> QuadResult:
    """Integral of ``F . dl`` along a polygonal path.

    ``vector_field`` maps an ``(n, 3)`` array of points to ``(n, 3)`` values.
    ``closed`` joins the last vertex back to the first. ``ray_in`` (a unit
    direction) prepends a ray arriving at the first vertex from infinity;
    ``ray_out`` appends one leaving the last vertex.
    """
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("vertices must have shape (n, 3)")
    if closed:
        pts = np.vstack([pts, pts[:1]])
    total = QuadResult(0.0, 0.0, 0, True)
    for p0, p1 in zip(pts[:-1], pts[1:]):
        chord = p1 - p0

        def seg(t, p0=p0, chord=chord):
            return vector_field(p0 + t[:, None] * chord) @ chord

        total = total + integrate_adaptive(seg, 0.0, 1.0, rel_tol, abs_tol, vectorized=True)
    for anchor, ray, sign in ((pts[0], ray_in, -1), (pts[-1], ray_out, 1)):
        if ray is None:
            continue
        d = np.asarray(ray, dtype=float)

        def along(u, anchor=anchor, d=d):
            return vector_field(anchor + u[:, None] * d) @ d

        # ray_in runs from -inf up to the anchor; ray_out from the anchor to +inf
        total = total + integrate_halfline(along, 0.0, rel_tol, abs_tol, scale=scale,
                                           direction=sign, vectorized=True)
    return total


def action_along_polyline(g: ABGeometry, vertices: Sequence, rel_tol: float = DEFAULT_REL_TOL,
                          abs_tol: float = DEFAULT_ABS_TOL) -> QuadResult:
    """Flux-string action along a piecewise-straight path that starts and ends
    with rays parallel to +y, like the straight paths it deforms."""
    yhat = (0.0, 1.0, 0.0)
    res = line_integral(lambda r: fluxstring_A(g.magnet, r), vertices, ray_in=yhat,
                        ray_out=yhat, scale=g.impact, rel_tol=rel_tol, abs_tol=abs_tol)
    return res.scaled(g.charge)


def interference_pattern(delta_phase: float, screen_xs, fringe_scale: float) -> np.ndarray:
    """Two unit-amplitude subpackets on a screen: rows of ``(x, intensity)``.

    ``intensity = |1 + exp(i(k x + delta_phase))|^2 = 2 (1 + cos(k x + delta_phase))``
    with ``k = 2 pi / fringe_scale``.
    """
    if not fringe_scale > 0:
        raise ValueError("fringe_scale must be positive")
    xs = np.asarray(screen_xs, dtype=float)
    intensity = 2.0 * (1.0 + np.cos(2.0 * math.pi * xs / fringe_scale + delta_phase))
    return np.column_stack([xs, intensity])


def fringe_shift(delta_phase: float, fringe_scale: float) -> float:
    """Screen position the central maximum moves to."""
    return -fringe_scale * delta_phase / (2.0 * math.pi)


def pair_identity_check(c: MovingCharge, d: MagneticDipole) -> tuple[float, float]:
    """Both sides of ``B_e(r_m) . m = e v_e . A_m(r_e)`` for one charge-dipole pair."""
    lhs = float(np.dot(charge_B(c, d.position), d.moment))
    rhs = float(c.charge * np.dot(c.velocity, dipole_A(d, c.position)))
    return lhs, rhs


@dataclass(frozen=True)
class DipoleLattice:
    """Uniformly magnetized cylinder (axis z) chopped into point dipoles.

    ``positions`` and ``moments`` are ``(n_cells, 3)`` arrays. Cell edges
    are uniform in z and phi and equal-area in radius (``r_k = R sqrt(k/n_r)``);
    each dipole sits at its cell's centroid.
    """

    positions: np.ndarray
    moments: np.ndarray
    magnet_radius: float
    half_length: float
    cell_counts: tuple[int, int, int]
    max_cell_diameter: float

    @property
    def cells(self) -> list[MagneticDipole]:
        return [MagneticDipole(m, p) for m, p in zip(self.moments, self.positions)]

    @property
    def total_moment(self) -> np.ndarray:
        return self.moments.sum(axis=0)

    @property
    def magnetization(self) -> float:
        volume = math.pi * self.magnet_radius**2 * 2.0 * self.half_length
        return float(self.total_moment[2] / volume)


def build_lattice(radius: float, half_length: float, flux: float,
                  n_z: int, n_r: int, n_phi: int) -> DipoleLattice:
    """Discretize a cylinder of total interior flux ``flux``.

    The magnetization is ``M = flux / (4 pi^2 R^2)`` along z, so the interior
    field ``4 pi M`` carries ``flux`` through the cross-section.
    """
    if min(n_z, n_r, n_phi) < 1:
        raise ValueError("cell counts must be at least 1")
    if not (radius > 0 and half_length > 0):
        raise ValueError("radius and half_length must be positive")
    magnetization = flux / (4.0 * math.pi**2 * radius**2)

    r_edges = radius * np.sqrt(np.arange(n_r + 1) / n_r)
    r1, r2 = r_edges[:-1], r_edges[1:]
    dphi = 2.0 * math.pi / n_phi
    # centroid radius of an annular sector; collapses onto the axis for a full ring
    rho_c = (2.0 / 3.0) * (r2**3 - r1**3) / (r2**2 - r1**2) * np.sinc(dphi / (2.0 * math.pi))
    phi_c = (np.arange(n_phi) + 0.5) * dphi
    dz = 2.0 * half_length / n_z
    z_c = -half_length + (np.arange(n_z) + 0.5) * dz

    zz, rr, pp = np.meshgrid(z_c, rho_c, phi_c, indexing="ij")
    positions = np.column_stack([(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel(), zz.ravel()])
    cell_volume = 0.5 * dphi * (radius**2 / n_r) * dz
    moments = np.zeros_like(positions)
    moments[:, 2] = magnetization * cell_volume

    chord = 2.0 * r2 * math.sin(min(dphi, math.pi) / 2.0)
    diameter = float(np.max(np.hypot(r2 - r1, chord)))
    return DipoleLattice(positions, moments, float(radius), float(half_length),
                         (int(n_z), int(n_r), int(n_phi)), diameter)


def interaction_potential_picture(lat: DipoleLattice, r_e, v_e, charge: float) -> np.ndarray:
    """``e v_e . sum_i A_i(r_e)`` at each electron position in ``r_e`` (shape ``(n, 3)``)."""
    r_e = np.atleast_2d(np.asarray(r_e, dtype=float))
    s = r_e[:, None, :] - lat.positions[None, :, :]
    a_total = dipole_potential(lat.moments[None, :, :], s).sum(axis=1)
    return charge * (a_total @ np.asarray(v_e, dtype=float))


def interaction_field_picture(lat: DipoleLattice, r_e, v_e, charge: float) -> np.ndarray:
    """``sum_i B_e(r_i) . m_i`` with ``B_e = v_e x E_e`` evaluated at every dipole."""
    r_e = np.atleast_2d(np.asarray(r_e, dtype=float))
    s = lat.positions[None, :, :] - r_e[:, None, :]
    b_e = np.cross(np.asarray(v_e, dtype=float), coulomb_field(charge, s))
    return np.sum(b_e * lat.moments[None, :, :], axis=(1, 2))


def _check_clearance(lat: DipoleLattice, g: ABGeometry) -> None:
    gap = g.impact - lat.magnet_radius
    need = CLEARANCE_FACTOR * lat.max_cell_diameter
    if gap < need:
        raise ClearanceError(
            f"path clearance {gap:.4g} is below {CLEARANCE_FACTOR:g} x cell diameter ({need:.4g})")


def _lattice_path_action(interaction, lat: DipoleLattice, g: ABGeometry, side: str,
                         rel_tol: float, abs_tol: float) -> QuadResult:
    path = g.path(side)
    velocity = np.array([0.0, g.speed, 0.0])

    def lagrangian_per_dy(y):
        # dt = dy / v
        return interaction(lat, path.point_at_y(y), velocity, g.charge) / g.speed

    finite = math.isfinite(g.y_start) and math.isfinite(g.y_end)
    y_max = LATTICE_RANGE_FACTOR * lat.half_length
    lo, hi = (g.y_start, g.y_end) if finite else (-y_max, y_max)
    res = integrate_adaptive(lagrangian_per_dy, lo, hi, rel_tol, abs_tol, vectorized=True)
    if finite:
        return res
    # beyond |y| >> L the finite magnet looks like one dipole: integrand ~ |y|^-3,
    # so each tail contributes f(Y) * Y / 2
    ends = lagrangian_per_dy(np.array([lo, hi]))
    tail = 0.5 * y_max * float(ends[0] + ends[1])
    return QuadResult(float(res.value) + tail, res.error_estimate, res.evaluations + 2, res.converged)


def _lattice_action(interaction, method: ActionMethod, lat: DipoleLattice, g: ABGeometry,
                    rel_tol: float, abs_tol: float, check_clearance: bool) -> ActionReport:
    if check_clearance:
        _check_clearance(lat, g)
    left = _lattice_path_action(interaction, lat, g, "left", rel_tol, abs_tol)
    right = _lattice_path_action(interaction, lat, g, "right", rel_tol, abs_tol)
    return ActionReport(float(right.value - left.value), left, right, method)


def lattice_action_potential_picture(lat: DipoleLattice, g: ABGeometry,
                                     rel_tol: float = DEFAULT_REL_TOL,
                                     abs_tol: float = DEFAULT_ABS_TOL,
                                     check_clearance: bool = True) -> ActionReport:
    """Action difference with the electron coupled to the summed dipole potentials."""
    return _lattice_action(interaction_potential_picture, ActionMethod.LATTICE_POTENTIAL_PICTURE,
                           lat, g, rel_tol, abs_tol, check_clearance)


def lattice_action_field_picture(lat: DipoleLattice, g: ABGeometry,
                                 rel_tol: float = DEFAULT_REL_TOL,
                                 abs_tol: float = DEFAULT_ABS_TOL,
                                 check_clearance: bool = True) -> ActionReport:
    """Action difference with every dipole coupled to the electron's own field."""
    return _lattice_action(interaction_field_picture, ActionMethod.LATTICE_FIELD_PICTURE,
                           lat, g, rel_tol, abs_tol, check_clearance)


class InertnessBound(NamedTuple):
    field_ratio: float
    transition_probability: float
    aggregate: float


def inertness_bound(atomic_distance: float, electron_distance: float,
                    n_atoms: float = 1.0) -> InertnessBound:
    """Order-of-magnitude inertness estimate for a magnetic atom.

    The electron's field at the atom falls off as the square of the distance
    relative to the neighbouring atoms' field; a transition probability goes
    as the square of that ratio.
    """
    if not (atomic_distance > 0 and electron_distance > 0):
        raise ValueError("distances must be positive")
    ratio = atomic_distance**2 / electron_distance**2
    probability = ratio**2
    return InertnessBound(ratio, probability, n_atoms * probability)
