"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even when
output is captured).
"""
import math
import time
import warnings

import numpy as np
import pytest

from abphase import ab_scenario as ab
from abphase import classical_device as cd
from abphase import neutron as nt
from abphase.fields import (FluxString, MagneticDipole, MovingCharge, dipole_field,
                            dipole_potential, fluxstring_A)
from abphase.runner import identity_deviation, random_pair

TWO_PI = 2 * math.pi


@pytest.fixture
def verdict(capsys):
    """Print one line per criterion, then assert on the collected checks."""

    def emit(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{name}: {'ok' if passed else 'FAILED'}" for name, passed in checks)
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})")
        failed = [name for name, passed in checks if not passed]
        assert not failed, f"criterion {number} failed: {failed}"

    return emit


def canonical(**kw):
    magnet = FluxString(kw.pop("radius", 0.1), kw.pop("flux", TWO_PI))
    return ab.ABGeometry(magnet=magnet, **kw)


def rel(value, expected):
    return abs(value - expected) / abs(expected)


def test_criterion_01_ab_action_difference(verdict):
    start = time.perf_counter()
    rep = ab.ab_action_difference(canonical(charge=-1.0))
    elapsed = time.perf_counter() - start
    dev = rel(rep.delta_I, -TWO_PI)
    verdict(1, "AB action difference equals e*flux", [
        (f"delta_I = {rep.delta_I:.15f}, rel dev {dev:.1e} <= 1e-8", dev <= 1e-8),
        (f"runtime {elapsed:.3f}s < 1s", elapsed < 1.0),
    ])


def test_criterion_02_one_sided_action(verdict):
    g = canonical()
    right = ab.action_along_path(g, "right")
    dev = rel(right.value, g.charge * g.magnet.flux / 2)
    verdict(2, "right-path action equals e*flux/2", [
        (f"value {right.value:.15f}, rel dev {dev:.1e} <= 1e-8", dev <= 1e-8),
    ])


def test_criterion_03_pair_identity(verdict):
    rng = np.random.default_rng(20240601)
    worst = max(identity_deviation(*random_pair(rng, 0.5, 50.0)) for _ in range(10_000))

    e, v, m, R, Z0 = -1.0, 0.01, 1.0, 0.1, 0.5
    lhs, rhs = ab.pair_identity_check(MovingCharge(e, [0.0, v, 0.0], [R, 0.0, Z0]),
                                      MagneticDipole([0.0, 0.0, m]))
    r = math.hypot(R, Z0)
    theta, phi = math.acos(Z0 / r), 0.0
    closed = m * e * v * math.sin(theta) * math.cos(phi) / r**2
    verdict(3, "pairwise identity B_e.m = e v.A_m", [
        (f"10^4 random pairs, worst rel dev {worst:.1e} <= 1e-12", worst <= 1e-12),
        (f"axial geometry lhs rel dev {rel(lhs, closed):.1e}", rel(lhs, closed) <= 1e-12),
        (f"axial geometry rhs rel dev {rel(rhs, closed):.1e}", rel(rhs, closed) <= 1e-12),
    ])


def test_criterion_04_classical_cancellation(verdict):
    radius = 0.1
    fluxes = [0.1, 1.0, 10.0, 100.0]
    impacts = [1.0, 2.0, 5.0, 10.0]
    worst_total, worst_i2 = 0.0, 0.0
    spreads = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", cd.ThinSolenoidWarning)
        for flux in fluxes:
            s = cd.ClassicalSolenoid.from_flux(radius, flux)
            i2_values = []
            for a in impacts:
                g = canonical(radius=radius, flux=flux, impact=a)
                rep = cd.cancellation(s, g)
                half = g.charge * flux / 2
                worst_total = max(worst_total, abs(rep.total) / abs(half))
                worst_i2 = max(worst_i2, rel(rep.delta_I2, -half))
                i2_values.append(rep.delta_I2)
            spreads.append((max(i2_values) - min(i2_values)) / abs(np.mean(i2_values)))
    verdict(4, "classical device cancels the AB phase", [
        (f"|I1 + I2| / |e flux / 2| worst {worst_total:.1e} <= 1e-8", worst_total <= 1e-8),
        (f"I2 vs -e flux/2 worst rel dev {worst_i2:.1e} <= 1e-8", worst_i2 <= 1e-8),
        (f"I2 spread over a in [1, 10] worst {max(spreads):.1e} <= 1e-7", max(spreads) <= 1e-7),
    ])


def test_criterion_05_delta_W_closed_form(verdict):
    s = cd.ClassicalSolenoid(0.02, 1.7)
    g = canonical(radius=0.02)
    ys = np.linspace(-10.0, 10.0, 10)
    numeric = np.array([cd.delta_W_numeric(s, g, y).value for y in ys])
    closed = -2 * math.pi * s.radius**2 * g.impact * g.speed * g.charge * s.current_density / (
        g.impact**2 + ys**2)
    worst = float(np.max(np.abs(numeric - closed) / np.abs(closed)))
    verdict(5, "numeric z-quadrature of the B_z kernel matches closed-form delta_W", [
        (f"10 y samples, worst rel dev {worst:.1e} <= 1e-6", worst <= 1e-6),
    ])


def test_criterion_06_emf_null(verdict):
    start = time.perf_counter()
    R = 1.0
    mags, agreements = [], []
    for factor in (10, 20, 40, 80):
        chk = nt.EMFCheck(R, factor * R, [0.5 * R, 0.0, 0.5 * R], [0, 0, 1.0], [0, 0, 0.01])
        mags.append(abs(nt.emf_on_solenoid(chk).value))
        gauss = nt.emf_gauss_check(chk)
        agreements.append(abs(gauss.surface_E - gauss.surface_Br)
                          / max(abs(gauss.surface_E), abs(gauss.surface_Br)))
    elapsed = time.perf_counter() - start
    monotone = all(b < a for a, b in zip(mags, mags[1:]))
    ratio = mags[-1] / mags[0]
    verdict(6, "EMF of the moving neutron vanishes", [
        ("strictly decreasing " + ", ".join(f"{m:.2e}" for m in mags), monotone),
        (f"last/first {ratio:.1e} < 1e-3", ratio < 1e-3),
        (f"E_phi vs -v B_r worst rel dev {max(agreements):.1e} <= 1e-8", max(agreements) <= 1e-8),
        (f"runtime {elapsed:.1f}s < 30s", elapsed < 30.0),
    ])


def test_criterion_07_two_picture_equivalence(verdict):
    start = time.perf_counter()
    g = canonical()
    lat = ab.build_lattice(g.magnet.radius, 100 * g.impact, g.magnet.flux, 16, 4, 16)
    pot = ab.lattice_action_potential_picture(lat, g)
    fld = ab.lattice_action_field_picture(lat, g)
    elapsed = time.perf_counter() - start
    e_phi = g.expected_delta_I
    diff = abs(pot.delta_I - fld.delta_I) / abs(e_phi)
    dev_pot, dev_fld = rel(pot.delta_I, e_phi), rel(fld.delta_I, e_phi)
    verdict(7, "16x4x16 lattice at L/a = 100: pictures agree and match e*flux", [
        (f"pictures rel diff {diff:.1e} <= 1e-10", diff <= 1e-10),
        (f"potential picture {pot.delta_I:.6f} vs {e_phi:.6f}, rel dev {dev_pot:.1e} <= 1e-2",
         dev_pot <= 1e-2),
        (f"field picture rel dev {dev_fld:.1e} <= 1e-2", dev_fld <= 1e-2),
        (f"runtime {elapsed:.1f}s < 120s", elapsed < 120.0),
    ])


def test_criterion_08_neutron_phase(verdict):
    m, b0, tau = 1.0, 2.0, 0.5
    gauss = nt.neutron_phase(nt.NeutronRun(m, 0.01, nt.GaussianProfile(b0, tau), (-8 * tau, 8 * tau)))
    expected = m * b0 * tau * math.sqrt(math.pi)
    sine = nt.neutron_phase(nt.NeutronRun(m, 0.01, nt.SinusoidProfile(b0, 3.0), (0.0, 3.0)))
    verdict(8, "neutron phase from the m.B(t) integrand", [
        (f"gaussian rel dev {rel(gauss.value, expected):.1e} <= 1e-9", rel(gauss.value, expected) <= 1e-9),
        (f"full-period sinusoid |phase| {abs(sine.value):.1e} < 1e-12", abs(sine.value) < 1e-12),
    ])


def test_criterion_09_inertness(verdict):
    bound = ab.inertness_bound(1e-8, 1e-4)
    # "exactly" up to floating-point round-off of the decimal powers
    verdict(9, "inertness bound at atomic / electron distances 1e-8 / 1e-4", [
        (f"field ratio {bound.field_ratio!r}", rel(bound.field_ratio, 1e-8) <= 1e-15),
        (f"transition probability {bound.transition_probability!r}",
         rel(bound.transition_probability, 1e-16) <= 1e-15),
    ])


def test_criterion_10_property_suites(verdict):
    rng = np.random.default_rng(7)
    h = 1e-4
    div_ok, curl_ok = True, True
    for _ in range(200):
        d = rng.normal(size=3)
        s = d / np.linalg.norm(d) * rng.uniform(0.5, 10.0)
        m = rng.normal(size=3)
        b = dipole_field(m, s)
        div = sum((dipole_field(m, s + h * e)[i] - dipole_field(m, s - h * e)[i]) / (2 * h)
                  for i, e in enumerate(np.eye(3)))
        div_ok &= abs(div) <= 1e-6 * np.linalg.norm(b) / h
        jac = np.column_stack([(dipole_potential(m, s + h * e) - dipole_potential(m, s - h * e)) / (2 * h)
                               for e in np.eye(3)])
        curl = np.array([jac[2, 1] - jac[1, 2], jac[0, 2] - jac[2, 0], jac[1, 0] - jac[0, 1]])
        curl_ok &= np.linalg.norm(curl - b) <= 1e-6 * np.linalg.norm(b)

    flux = 1.3
    string = FluxString(0.2, flux)
    field = lambda r: fluxstring_A(string, r)  # noqa: E731
    square = [[2, -2, 0], [2, 2, 0.5], [-2, 2, 0], [-2, -2, -0.5]]
    outside = [[3, 1, 0], [5, 1, 0], [5, 3, 1], [3, 3, 0]]
    enclosing = ab.line_integral(field, square, closed=True).value
    away = ab.line_integral(field, outside, closed=True).value

    g = canonical()
    straight = ab.action_along_path(g, "right").value
    detours = [
        [[1.0, -3.0, 0.0], [6.0, 0.0, 2.0], [1.0, 3.0, 0.0]],
        [[0.5, -1.0, 0.0], [0.5, 1.0, 0.0]],
        [[2.0, -10.0, -1.0], [9.0, -2.0, 0.0], [0.3, 0.0, 0.0], [3.0, 4.0, 1.0]],
    ]
    worst_deform = max(abs(ab.action_along_polyline(g, v).value - straight) for v in detours)
    worst_deform /= abs(g.expected_delta_I)

    verdict(10, "field and gauge property suites", [
        ("div B = 0 at 200 random points", bool(div_ok)),
        ("curl A = B at 200 random points", bool(curl_ok)),
        (f"enclosing loop {enclosing:.12f} vs flux {flux}", abs(enclosing - flux) <= 1e-9 * flux),
        (f"non-enclosing loop {away:.1e}", abs(away) <= 1e-9 * flux),
        (f"homotopic path deformation worst rel change {worst_deform:.1e} < 1e-8", worst_deform < 1e-8),
    ])
