import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from abphase.ab_scenario import line_integral
from abphase.fields import (
    FluxString,
    InteriorEvaluationError,
    MagneticDipole,
    MovingCharge,
    SingularityError,
    charge_B,
    charge_E,
    dipole_A,
    dipole_B,
    dipole_field,
    dipole_potential,
    fluxstring_A,
    moving_dipole_E,
)

ZHAT = np.array([0.0, 0.0, 1.0])
H = 1e-4


def _unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


@st.composite
def displacements(draw, rmin=0.5, rmax=10.0):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return _unit(rng) * rng.uniform(rmin, rmax), rng.normal(size=3)


# --------------------------------------------------------------------------- dipole B

def test_dipole_B_on_axis_and_equator():
    d = MagneticDipole(ZHAT)
    assert_allclose(dipole_B(d, [0, 0, 2]), [0, 0, 0.25], atol=1e-16)
    assert_allclose(dipole_B(d, [1, 0, 0]), [0, 0, -1.0], atol=1e-16)


def test_dipole_B_oblique_against_scalar_evaluation():
    s = (1.0, 0.0, 1.0)
    r = math.sqrt(2.0)
    m_dot_s = 1.0
    expected = [3 * m_dot_s * s[i] / r**5 - (0.0, 0.0, 1.0)[i] / r**3 for i in range(3)]
    assert_allclose(dipole_B(MagneticDipole(ZHAT), s), expected, rtol=1e-15)


def test_dipole_B_respects_position():
    d = MagneticDipole(ZHAT, position=[1.0, 2.0, 3.0])
    assert_allclose(dipole_B(d, [1.0, 2.0, 5.0]), [0, 0, 0.25], atol=1e-16)


def test_zero_moment_gives_zero_fields():
    d = MagneticDipole(np.zeros(3))
    assert_array_equal(dipole_B(d, [1, 2, 3]), 0.0)
    assert_array_equal(dipole_A(d, [1, 2, 3]), 0.0)


def test_dipole_singularity():
    d = MagneticDipole(ZHAT, position=[0.5, 0.5, 0.5])
    for fn in (dipole_B, dipole_A):
        with pytest.raises(SingularityError):
            fn(d, [0.5, 0.5, 0.5])


def test_dipole_rejects_nonfinite_moment():
    with pytest.raises(ValueError):
        MagneticDipole([0.0, math.inf, 0.0])


def test_kernels_broadcast():
    rng = np.random.default_rng(3)
    s = rng.normal(size=(4, 5, 3)) + 3.0
    m = rng.normal(size=3)
    batched = dipole_field(m, s)
    assert batched.shape == (4, 5, 3)
    assert_allclose(batched[2, 3], dipole_field(m, s[2, 3]), rtol=1e-15)


@given(displacements())
@settings(max_examples=60)
def test_div_B_vanishes(sample):
    s, m = sample
    div = sum(
        (dipole_field(m, s + H * e)[i] - dipole_field(m, s - H * e)[i]) / (2 * H)
        for i, e in enumerate(np.eye(3))
    )
    b = np.linalg.norm(dipole_field(m, s))
    assert abs(div) <= 1e-6 * b / H


@given(displacements())
@settings(max_examples=60)
def test_curl_A_is_B(sample):
    s, m = sample
    jac = np.empty((3, 3))  # jac[i, j] = d A_i / d x_j
    for j, e in enumerate(np.eye(3)):
        jac[:, j] = (dipole_potential(m, s + H * e) - dipole_potential(m, s - H * e)) / (2 * H)
    curl = np.array([jac[2, 1] - jac[1, 2], jac[0, 2] - jac[2, 0], jac[1, 0] - jac[0, 1]])
    b = dipole_field(m, s)
    assert np.linalg.norm(curl - b) <= 1e-6 * np.linalg.norm(b)


# --------------------------------------------------------------------------- dipole A

def test_dipole_A_examples():
    d = MagneticDipole(ZHAT)
    assert_allclose(dipole_A(d, [1, 0, 0]), [0, 1, 0], atol=1e-16)
    assert_array_equal(dipole_A(d, [0, 0, 5]), [0, 0, 0])


def test_dipole_A_matches_spherical_form():
    # A_phi = m sin(theta) / r^2 at r = sqrt(2), theta = pi/4
    a = dipole_A(MagneticDipole(ZHAT), [1.0, 0.0, 1.0])
    assert_allclose(a, [0.0, math.sin(math.pi / 4) / 2.0, 0.0], atol=1e-16)
    assert_allclose(a[1], 0.35355339059327373, rtol=1e-15)


@given(displacements())
def test_dipole_A_antisymmetric(sample):
    s, m = sample
    assert_allclose(dipole_potential(m, s), -dipole_potential(m, -s), rtol=1e-15, atol=0)


# --------------------------------------------------------------------------- moving charge

def test_charge_E_examples():
    assert_allclose(charge_E(MovingCharge(-1.0), [1, 0, 0]), [-1, 0, 0])
    assert_allclose(charge_E(MovingCharge(2.0), [0, 0, 2]), [0, 0, 0.5])


def test_charge_E_angular_form():
    # electron at (R, 0, Z0), field at the origin: E_x = -e sin(theta) cos(phi) / r^2
    e, R, Z0 = -1.0, 0.1, 0.5
    c = MovingCharge(e, position=[R, 0.0, Z0])
    r = math.hypot(R, Z0)
    theta = math.acos(Z0 / r)
    assert_allclose(charge_E(c, [0, 0, 0])[0], -e * math.sin(theta) * 1.0 / r**2, rtol=1e-14)


def test_charge_B_on_path():
    # charge at (a, y, 0) moving along +y, field point on the axis at height z
    e, v, a, y, z = -1.0, 0.01, 1.0, 0.7, -0.4
    c = MovingCharge(e, [0.0, v, 0.0], [a, y, 0.0])
    expected = v * a * e / (a * a + y * y + z * z) ** 1.5
    assert_allclose(charge_B(c, [0.0, 0.0, z])[2], expected, rtol=1e-14)


def test_charge_B_static_and_parallel():
    assert_array_equal(charge_B(MovingCharge(1.0), [1, 2, 3]), 0.0)
    c = MovingCharge(1.0, [0.0, 0.05, 0.0])
    assert_allclose(charge_B(c, [0.0, 4.0, 0.0]), 0.0, atol=1e-18)


@given(displacements(), st.floats(1e-4, 0.099))
def test_charge_B_perpendicular_to_velocity(sample, speed):
    s, direction = sample
    v = direction / np.linalg.norm(direction) * speed
    b = charge_B(MovingCharge(-1.0, v), s)
    assert abs(np.dot(b, v)) <= 1e-14 * np.linalg.norm(b) * np.linalg.norm(v) + 1e-300


def test_charge_speed_limit():
    with pytest.raises(ValueError):
        MovingCharge(-1.0, [0.1, 0.0, 0.0])


def test_charge_singularity():
    with pytest.raises(SingularityError):
        charge_E(MovingCharge(1.0, position=[1, 1, 1]), [1, 1, 1])


# --------------------------------------------------------------------------- moving dipole

def test_moving_dipole_E_vanishes_on_axis_and_at_rest():
    d = MagneticDipole(ZHAT)
    assert_allclose(moving_dipole_E(d, [0, 0, 0.01], [0, 0, 3]), 0.0, atol=1e-18)
    assert_array_equal(moving_dipole_E(d, [0, 0, 0], [1, 2, 3]), 0.0)


def test_moving_dipole_E_componentwise():
    v = 0.01
    # B at (1, 0, 1) from m = z: r = sqrt 2, B = (3/r^5, 0, 3/r^5 - 1/r^3)
    r = math.sqrt(2.0)
    bx, bz = 3 / r**5, 3 / r**5 - 1 / r**3
    # -v x B with v = (0, 0, v): -(vz*(-by)... ) -> (v*by, -v*bx, 0) with by = 0
    expected = [0.0, -v * bx, 0.0]
    got = moving_dipole_E(MagneticDipole(ZHAT), [0, 0, v], [1.0, 0.0, 1.0])
    assert_allclose(got, expected, atol=1e-18)
    assert bz != 0  # the z-component of B drops out because it is parallel to v


def test_reversing_velocity_flips_E():
    d = MagneticDipole([0.3, -0.2, 1.0])
    r = [0.4, 1.1, -0.7]
    v = np.array([0.0, 0.0, 0.02])
    assert_allclose(moving_dipole_E(d, -v, r), -moving_dipole_E(d, v, r), rtol=0, atol=0)


# --------------------------------------------------------------------------- flux string

def test_fluxstring_examples():
    s = FluxString(0.5, 2 * math.pi)
    assert_allclose(fluxstring_A(s, [1, 0, 0]), [0, 1, 0])
    assert_allclose(fluxstring_A(s, [2, 0, 0]), [0, 0.5, 0])


def test_fluxstring_interior_rejected():
    s = FluxString(0.5, 1.0)
    with pytest.raises(InteriorEvaluationError):
        fluxstring_A(s, [0.3, 0.3, 7.0])
    with pytest.raises(ValueError):
        FluxString(0.0, 1.0)


def test_fluxstring_circle_loop():
    flux = 2 * math.pi
    s = FluxString(0.1, flux)
    phi = np.linspace(0, 2 * math.pi, 257)[:-1]
    circle = np.column_stack([3 * np.cos(phi), 3 * np.sin(phi), np.zeros_like(phi)])
    # the polygon chords shrink the radius, but the winding is the same
    res = line_integral(lambda r: fluxstring_A(s, r), circle, closed=True)
    assert_allclose(res.value, flux, rtol=1e-9)


@st.composite
def loops(draw, enclosing):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = rng.integers(3, 9)
    phi = np.sort(rng.uniform(0, 2 * math.pi, n))
    if enclosing:
        # star-shaped around the axis, consecutive angular gaps below pi
        phi = np.linspace(0, 2 * math.pi, n, endpoint=False) + rng.uniform(-0.3, 0.3, n) / n
        rho = rng.uniform(1.0, 5.0, n)
        pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), rng.uniform(-2, 2, n)])
    else:
        # vertices within radius 2 of a center at least 4 from the axis
        psi = rng.uniform(0, 2 * math.pi)
        center = rng.uniform(4, 8) * np.array([math.cos(psi), math.sin(psi)])
        rho = rng.uniform(0.5, 2.0, n)
        pts = np.column_stack([center[0] + rho * np.cos(phi), center[1] + rho * np.sin(phi),
                               rng.uniform(-2, 2, n)])
    return pts


@given(loops(enclosing=True), st.booleans())
@settings(max_examples=25, deadline=None)
def test_loop_enclosing_axis_gives_flux(pts, reverse):
    s = FluxString(0.2, 1.7)
    if reverse:
        pts = pts[::-1]
    res = line_integral(lambda r: fluxstring_A(s, r), pts, closed=True, rel_tol=1e-10)
    assert_allclose(res.value, -1.7 if reverse else 1.7, rtol=1e-9)


@given(loops(enclosing=False))
@settings(max_examples=25, deadline=None)
def test_loop_not_enclosing_axis_gives_zero(pts):
    s = FluxString(0.2, 1.7)
    res = line_integral(lambda r: fluxstring_A(s, r), pts, closed=True, rel_tol=1e-10)
    assert abs(res.value) <= 1e-9 * 1.7
