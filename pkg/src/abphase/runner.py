"""Scenario orchestration: config parsing, sweep expansion, CSV records.

A config is a flat ``key = value`` document with dotted namespaces::

    scenario = classical-device
    output = results/cancel.csv
    magnet.flux = 2pi
    sweep.parameter = magnet.flux
    sweep.values = 1, 10, 100
    tolerance.rel = 1e-9

Every scenario has defaults for all of its keys, so a scenario name alone
runs the canonical geometry (a = 1, R = 0.1, v = 0.01, e = -1, flux = 2 pi).
"""
from __future__ import annotations

import configparser
import csv
import logging
import math
import os
import re
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from . import ab_scenario as ab
from . import classical_device as cd
from . import neutron as nt
from .fields import FluxString, MagneticDipole, MovingCharge
from .numerics import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, IntegrandError

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "ABPHASE_OUTPUT_DIR"
EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 1, 2
CSV_TAIL = ["value", "error_estimate", "expected", "rel_deviation", "tolerance", "passed", "wall_ms"]

_PI_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?)\s*\*?\s*pi\s*$")


class ConfigError(ValueError):
    """Invalid scenario configuration (exit status 2)."""


def parse_number(text: str) -> float:
    """Float literal, optionally a multiple of pi (``2pi``, ``-0.5*pi``, ``pi``)."""
    m = _PI_NUMBER.match(text)
    if m:
        coeff = {"": 1.0, "+": 1.0, "-": -1.0}.get(m.group(1))
        return (float(m.group(1)) if coeff is None else coeff) * math.pi
    return float(text)


def parse_number_list(text: str) -> list[float]:
    return [parse_number(item) for item in text.split(",") if item.strip()]


# --------------------------------------------------------------------------- schemas

COMMON = {
    "electron.charge": -1.0,
    "electron.speed": 0.01,
    "geometry.impact": 1.0,
    "magnet.radius": 0.1,
    "magnet.flux": 2.0 * math.pi,
}

SCHEMAS: dict[str, dict[str, Any]] = {
    "ab-flux-string": dict(COMMON),
    "ab-lattice": {
        **COMMON,
        "lattice.n_z": 256,
        "lattice.n_r": 4,
        "lattice.n_phi": 16,
        "lattice.length_factor": 100.0,
    },
    "classical-device": {**COMMON, "solenoid.n_shells": 0},
    "neutron-phase": {
        "neutron.moment": 1.0,
        "neutron.speed": 0.01,
        "field.profile": "gaussian",
        "field.amplitude": 1.0,
        "field.tau": 1.0,
        "field.period": 1.0,
        "field.phase": 0.0,
        "field.center": 0.0,
        "field.times": None,
        "field.values": None,
        "run.t0": None,
        "run.t1": None,
    },
    "neutron-emf": {
        "solenoid.radius": 1.0,
        "neutron.moment": 1.0,
        "neutron.speed": 0.01,
        "neutron.offset_rho": 0.5,
        "neutron.offset_z": 0.5,
        "emf.length_factors": [10.0, 20.0, 40.0, 80.0],
        "emf.n_phi": 64,
    },
    "identity-check": {
        "identity.samples": 10_000,
        "identity.seed": 0,
        "identity.min_separation": 0.5,
        "identity.max_separation": 50.0,
        "identity.moment": 1.0,
        "identity.z0": 0.5,
        "electron.charge": -1.0,
        "electron.speed": 0.01,
        "magnet.radius": 0.1,
    },
    "inertness": {
        "inertness.atomic_distance": 1e-8,
        "inertness.electron_distance": 1e-4,
        "inertness.n_atoms": 1e12,
    },
}

STRING_KEYS = {"field.profile"}
LIST_KEYS = {"field.times", "field.values", "emf.length_factors"}
INT_KEYS = {"lattice.n_z", "lattice.n_r", "lattice.n_phi", "solenoid.n_shells",
            "emf.n_phi", "identity.samples", "identity.seed"}


@dataclass
class ScenarioConfig:
    scenario: str
    parameters: dict[str, Any] = field(default_factory=dict)
    sweep: tuple[str, list[float]] | None = None
    output_path: str | None = None
    tolerances: tuple[float, float] = (DEFAULT_REL_TOL, DEFAULT_ABS_TOL)
    workers: int = 1
    timing: bool = True

    def resolved_output(self) -> Path:
        if self.output_path:
            return Path(self.output_path)
        return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / f"{self.scenario}.csv"


@dataclass
class RunRecord:
    scenario: str
    quantity: str
    params: dict[str, Any]
    value: float
    error_estimate: float | None = None
    expected: float | None = None
    rel_deviation: float | None = None
    tolerance: float | None = None
    passed: bool | None = None
    wall_ms: float | None = None

    def row(self, param_keys: list[str], timing: bool = True) -> dict[str, str]:
        out = {"scenario": self.scenario, "quantity": self.quantity}
        for k in param_keys:
            out[k] = _fmt(self.params.get(k))
        out.update(
            value=_fmt(self.value),
            error_estimate=_fmt(self.error_estimate),
            expected=_fmt(self.expected),
            rel_deviation=_fmt(self.rel_deviation),
            tolerance=_fmt(self.tolerance),
            passed="" if self.passed is None else str(bool(self.passed)).lower(),
            wall_ms=_fmt(round(self.wall_ms, 3)) if timing and self.wall_ms is not None else "",
        )
        return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _coerce(scenario: str, key: str, value):
    if key in STRING_KEYS:
        return str(value).strip()
    if key in LIST_KEYS:
        if isinstance(value, str):
            return parse_number_list(value)
        return [float(x) for x in value]
    try:
        number = parse_number(value) if isinstance(value, str) else float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{scenario}: key {key!r} expects a number, got {value!r}") from None
    if key in INT_KEYS:
        if number != int(number):
            raise ConfigError(f"{scenario}: key {key!r} expects an integer, got {value!r}")
        return int(number)
    return number


def validate(config: ScenarioConfig) -> dict[str, Any]:
    """Merge defaults, coerce types, and reject unknown or missing keys."""
    if config.scenario not in SCHEMAS:
        raise ConfigError(f"unknown scenario {config.scenario!r}; choose from {sorted(SCHEMAS)}")
    schema = SCHEMAS[config.scenario]
    unknown = sorted(set(config.parameters) - set(schema))
    if unknown:
        raise ConfigError(f"{config.scenario}: unknown keys {unknown}")
    params = dict(schema)
    for k, v in config.parameters.items():
        params[k] = _coerce(config.scenario, k, v)
    if config.sweep is not None:
        key, values = config.sweep
        if key not in schema:
            raise ConfigError(f"{config.scenario}: unknown sweep parameter {key!r}")
        if not values:
            raise ConfigError(f"{config.scenario}: sweep over {key!r} has no values")
    missing = [k for k in _required(config.scenario, params) if params.get(k) is None]
    if missing:
        raise ConfigError(f"{config.scenario}: missing required keys {missing}")
    rel, abs_ = config.tolerances
    if not (rel > 0 and abs_ > 0):
        raise ConfigError("tolerances must be positive")
    return params


def _required(scenario: str, params: dict) -> list[str]:
    if scenario == "neutron-phase" and params.get("field.profile") == "table":
        return ["field.times", "field.values"]
    return []


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    """Read a flat ``key = value`` document (``#`` comments allowed)."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    entries = dict(parser["run"])
    return config_from_mapping(entries, source=str(path))


def config_from_mapping(entries: dict[str, str], source: str = "config") -> ScenarioConfig:
    entries = dict(entries)
    scenario = entries.pop("scenario", None)
    if scenario is None:
        raise ConfigError(f"{source}: missing required key 'scenario'")
    output = entries.pop("output", None)
    try:
        rel = parse_number(entries.pop("tolerance.rel", str(DEFAULT_REL_TOL)))
        abs_ = parse_number(entries.pop("tolerance.abs", str(DEFAULT_ABS_TOL)))
        workers = int(entries.pop("run.workers", "1"))
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    timing = entries.pop("run.timing", "true").strip().lower() not in ("false", "0", "no")
    sweep = None
    if "sweep.parameter" in entries or "sweep.values" in entries:
        key = entries.pop("sweep.parameter", None)
        values = entries.pop("sweep.values", None)
        if key is None or values is None:
            raise ConfigError(f"{source}: sweep needs both 'sweep.parameter' and 'sweep.values'")
        sweep = (key.strip(), parse_number_list(values))
    return ScenarioConfig(scenario.strip(), entries, sweep, output, (rel, abs_), workers, timing)


# --------------------------------------------------------------------------- scenarios

def _record(scenario, quantity, params, value, *, error=None, expected=None, rel_tol=None,
            abs_tol=0.0, converged=True) -> RunRecord:
    """Build a record; with an expectation it passes iff the quadrature converged and
    ``|value - expected| <= max(rel_tol |expected|, abs_tol)``."""
    value = float(value)
    rec = RunRecord(scenario, quantity, params, value, error, expected)
    if expected is not None:
        diff = abs(value - expected)
        rec.rel_deviation = diff / abs(expected) if expected != 0 else diff
        rec.tolerance = rel_tol if expected != 0 else abs_tol
        rec.passed = bool(converged and diff <= max((rel_tol or 0.0) * abs(expected), abs_tol))
    elif not converged:
        rec.passed = False
    return rec


def _geometry(p) -> ab.ABGeometry:
    return ab.ABGeometry(FluxString(p["magnet.radius"], p["magnet.flux"]), impact=p["geometry.impact"],
                         speed=p["electron.speed"], charge=p["electron.charge"])


def _run_ab_flux_string(p, rel, abs_):
    g = _geometry(p)
    report = ab.ab_action_difference(g, rel, abs_)
    e_phi = g.expected_delta_I
    name = "ab-flux-string"
    return [
        _record(name, "action.right", p, report.right.value, error=report.right.error_estimate,
                converged=report.right.converged, expected=e_phi / 2, rel_tol=1e-8, abs_tol=1e-12),
        _record(name, "action.left", p, report.left.value, error=report.left.error_estimate,
                converged=report.left.converged, expected=-e_phi / 2, rel_tol=1e-8, abs_tol=1e-12),
        _record(name, "delta_I", p, report.delta_I, error=report.error_estimate,
                converged=report.converged, expected=e_phi, rel_tol=1e-8, abs_tol=1e-12),
    ]


def _run_ab_lattice(p, rel, abs_):
    g = _geometry(p)
    lat = ab.build_lattice(p["magnet.radius"], p["lattice.length_factor"] * g.impact, p["magnet.flux"],
                           p["lattice.n_z"], p["lattice.n_r"], p["lattice.n_phi"])
    pot = ab.lattice_action_potential_picture(lat, g, rel, abs_)
    fld = ab.lattice_action_field_picture(lat, g, rel, abs_)
    e_phi = g.expected_delta_I
    name = "ab-lattice"
    diff = abs(pot.delta_I - fld.delta_I) / abs(e_phi) if e_phi else abs(pot.delta_I - fld.delta_I)
    return [
        _record(name, "delta_I.potential", p, pot.delta_I, error=pot.error_estimate,
                converged=pot.converged, expected=e_phi, rel_tol=1e-2, abs_tol=1e-12),
        _record(name, "delta_I.field", p, fld.delta_I, error=fld.error_estimate,
                converged=fld.converged, expected=e_phi, rel_tol=1e-2, abs_tol=1e-12),
        _record(name, "pictures.difference", p, diff, expected=0.0, abs_tol=1e-10),
    ]


def _run_classical(p, rel, abs_):
    g = _geometry(p)
    s = cd.ClassicalSolenoid.from_flux(p["magnet.radius"], p["magnet.flux"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", cd.ThinSolenoidWarning)
        one = cd.delta_I1(s, g, rel, abs_)
        two = cd.delta_I2(s, g, rel, abs_)
    half = g.charge * s.flux() / 2.0
    name = "classical-device"
    total = float(one.value + two.value)
    records = [
        _record(name, "delta_I1", p, one.value, error=one.error_estimate,
                converged=one.converged, expected=half, rel_tol=1e-8, abs_tol=1e-12),
        _record(name, "delta_I2", p, two.value, error=two.error_estimate,
                converged=two.converged, expected=-half, rel_tol=1e-8, abs_tol=1e-12),
        _record(name, "total", p, total, error=one.error_estimate + two.error_estimate,
                converged=one.converged and two.converged,
                expected=0.0, abs_tol=max(1e-8 * abs(half), 1e-15)),
    ]
    if half:
        records[-1].rel_deviation = abs(total) / abs(half)
        records[-1].tolerance = 1e-8
    n_shells = p["solenoid.n_shells"]
    if n_shells > 0:
        thick = cd.thick_solenoid_delta_I2(s, g, n_shells, rel, abs_)
        expected = -g.charge * cd.thick_solenoid_flux(s, n_shells) / 2.0
        records.append(_record(name, "delta_I2.shells", p, thick.value,
                               error=thick.error_estimate, converged=thick.converged,
                               expected=expected, rel_tol=1e-6, abs_tol=1e-12))
    return records


def _profile_from(p):
    name = p["field.profile"]
    if name == "constant":
        return nt.ConstantProfile(p["field.amplitude"])
    if name == "sinusoid":
        return nt.SinusoidProfile(p["field.amplitude"], p["field.period"], p["field.phase"])
    if name == "gaussian":
        return nt.GaussianProfile(p["field.amplitude"], p["field.tau"], p["field.center"])
    if name == "table":
        return nt.TableProfile(tuple(p["field.times"]), tuple(p["field.values"]))
    raise ConfigError(f"neutron-phase: unknown field.profile {name!r}; choose from {sorted(nt.PROFILES)}")


def _default_window(p) -> tuple[float, float]:
    name = p["field.profile"]
    if name == "gaussian":
        return p["field.center"] - 8 * p["field.tau"], p["field.center"] + 8 * p["field.tau"]
    if name == "sinusoid":
        return 0.0, p["field.period"]
    if name == "table":
        return p["field.times"][0], p["field.times"][-1]
    return 0.0, 1.0


def _phase_closed_form(p, t0: float, t1: float) -> float:
    m, b0 = p["neutron.moment"], p["field.amplitude"]
    name = p["field.profile"]
    if name == "constant":
        return m * b0 * (t1 - t0)
    if name == "sinusoid":
        w = 2 * math.pi / p["field.period"]
        return m * b0 * (math.cos(w * t0 + p["field.phase"]) - math.cos(w * t1 + p["field.phase"])) / w
    if name == "gaussian":
        tau, c = p["field.tau"], p["field.center"]
        return m * b0 * tau * math.sqrt(math.pi) / 2 * (math.erf((t1 - c) / tau) - math.erf((t0 - c) / tau))
    # piecewise linear: trapezoids between knots, constant extension outside
    knots = np.asarray(p["field.times"], dtype=float)
    grid = np.unique(np.clip(np.concatenate([knots, [t0, t1]]), t0, t1))
    vals = np.interp(grid, knots, p["field.values"])
    return m * float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)))


def _run_neutron_phase(p, rel, abs_):
    t0, t1 = _default_window(p)
    t0 = p["run.t0"] if p["run.t0"] is not None else t0
    t1 = p["run.t1"] if p["run.t1"] is not None else t1
    run = nt.NeutronRun(p["neutron.moment"], p["neutron.speed"], _profile_from(p), (t0, t1))
    res = nt.neutron_phase(run, rel, abs_)
    return [_record("neutron-phase", "phase", p, res.value,
                    error=res.error_estimate, converged=res.converged,
                    expected=_phase_closed_form(p, t0, t1), rel_tol=1e-9, abs_tol=1e-12)]


def _run_neutron_emf(p, rel, abs_):
    R = p["solenoid.radius"]
    position = [p["neutron.offset_rho"] * R, 0.0, p["neutron.offset_z"] * R]
    records, magnitudes = [], []
    for factor in p["emf.length_factors"]:
        chk = nt.EMFCheck(R, factor * R, position, [0, 0, p["neutron.moment"]], [0, 0, p["neutron.speed"]])
        emf = nt.emf_on_solenoid(chk, p["emf.n_phi"], rel, abs_)
        gauss = nt.emf_gauss_check(chk, p["emf.n_phi"], rel, abs_)
        closed = nt.closed_surface_flux(chk, p["emf.n_phi"], rel, abs_)
        rung = {**p, "emf.length_factor": factor}
        magnitudes.append(abs(float(emf.value)))
        denom = max(abs(gauss.surface_E), abs(gauss.surface_Br))
        agreement = abs(gauss.surface_E - gauss.surface_Br) / denom if denom else 0.0
        records += [
            _record("neutron-emf", "emf", rung, emf.value, error=emf.error_estimate,
                    converged=emf.converged),
            _record("neutron-emf", "gauss.agreement", rung, agreement, expected=0.0, abs_tol=1e-8),
            _record("neutron-emf", "closed_surface_flux", rung, closed.value,
                    error=closed.error_estimate, converged=closed.converged, expected=0.0,
                    abs_tol=max(1e-9 * p["neutron.moment"] / R, 1e-15)),
        ]
    increases = sum(1 for a, b in zip(magnitudes, magnitudes[1:]) if not b < a)
    ratio = magnitudes[-1] / magnitudes[0] if magnitudes[0] else 0.0
    records += [
        _record("neutron-emf", "emf.non_decreasing_steps", p, increases, expected=0.0, abs_tol=0.0),
        _record("neutron-emf", "emf.decay_ratio", p, ratio, expected=0.0, abs_tol=1e-3),
    ]
    return records


def identity_deviation(c: MovingCharge, d: MagneticDipole) -> float:
    """``|lhs - rhs|`` relative to the pair's natural scale ``|e||v||m| / r^2``."""
    lhs, rhs = ab.pair_identity_check(c, d)
    r = float(np.linalg.norm(c.position - d.position))
    scale = abs(c.charge) * np.linalg.norm(c.velocity) * np.linalg.norm(d.moment) / r**2
    return abs(lhs - rhs) / scale if scale else abs(lhs - rhs)


def random_pair(rng: np.random.Generator, min_sep: float,
                max_sep: float) -> tuple[MovingCharge, MagneticDipole]:
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    sep = rng.uniform(min_sep, max_sep)
    dipole_pos = rng.uniform(-10, 10, size=3)
    v = rng.normal(size=3)
    v *= rng.uniform(1e-4, 0.099) / np.linalg.norm(v)
    charge = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0)
    return (MovingCharge(charge, v, dipole_pos + sep * direction),
            MagneticDipole(rng.normal(size=3), dipole_pos))


def _run_identity(p, rel, abs_):
    rng = np.random.default_rng(int(p["identity.seed"]))
    worst = max(identity_deviation(*random_pair(rng, p["identity.min_separation"],
                                                p["identity.max_separation"]))
                for _ in range(int(p["identity.samples"])))
    e, v, m = p["electron.charge"], p["electron.speed"], p["identity.moment"]
    rs, z0 = p["magnet.radius"], p["identity.z0"]
    c = MovingCharge(e, [0.0, v, 0.0], [rs, 0.0, z0])
    d = MagneticDipole([0.0, 0.0, m], [0.0, 0.0, 0.0])
    lhs, rhs = ab.pair_identity_check(c, d)
    r = math.hypot(rs, z0)
    theta, phi = math.acos(z0 / r), 0.0
    closed_form = m * e * v * math.sin(theta) * math.cos(phi) / r**2
    name = "identity-check"
    return [
        _record(name, "random.max_rel_deviation", p, worst, expected=0.0, abs_tol=1e-12),
        _record(name, "axial_geometry.lhs", p, lhs, expected=closed_form, rel_tol=1e-12),
        _record(name, "axial_geometry.rhs", p, rhs, expected=closed_form, rel_tol=1e-12),
    ]


def _run_inertness(p, rel, abs_):
    ad, ed, n = p["inertness.atomic_distance"], p["inertness.electron_distance"], p["inertness.n_atoms"]
    bound = ab.inertness_bound(ad, ed, n)
    # decade arithmetic as an independent route to the same powers
    decades = 2.0 * (math.log10(ad) - math.log10(ed))
    name = "inertness"
    return [
        _record(name, "field_ratio", p, bound.field_ratio, expected=10.0**decades, rel_tol=1e-12),
        _record(name, "transition_probability", p, bound.transition_probability,
                expected=10.0 ** (2 * decades), rel_tol=1e-12),
        _record(name, "aggregate", p, bound.aggregate, expected=n * 10.0 ** (2 * decades), rel_tol=1e-12),
    ]


RUNNERS: dict[str, Callable] = {
    "ab-flux-string": _run_ab_flux_string,
    "ab-lattice": _run_ab_lattice,
    "classical-device": _run_classical,
    "neutron-phase": _run_neutron_phase,
    "neutron-emf": _run_neutron_emf,
    "identity-check": _run_identity,
    "inertness": _run_inertness,
}


def _run_point(scenario: str, params: dict, rel: float, abs_: float) -> list[RunRecord]:
    start = time.perf_counter()
    try:
        records = RUNNERS[scenario](params, rel, abs_)
    except IntegrandError as exc:
        logger.warning("%s: %s", scenario, exc)
        records = [RunRecord(scenario, "integrand_error", params, exc.abscissa, passed=False)]
    elapsed = 1e3 * (time.perf_counter() - start)
    for rec in records:
        rec.wall_ms = elapsed
    return records


def run(config: ScenarioConfig, write: bool = True) -> list[RunRecord]:
    """Execute a scenario (expanding any sweep), optionally write the CSV, return records."""
    params = validate(config)
    points = [params]
    if config.sweep is not None:
        key, values = config.sweep
        points = [{**params, key: _coerce(config.scenario, key, v)} for v in values]
    rel, abs_ = config.tolerances

    def one(point):
        logger.info("running %s with %s", config.scenario, point)
        return _run_point(config.scenario, point, rel, abs_)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            batches = list(pool.map(one, points))
    else:
        batches = [one(p) for p in points]
    records = [rec for batch in batches for rec in batch]
    if write:
        write_csv(records, config.resolved_output(), timing=config.timing)
    return records


def exit_status(records: Iterable[RunRecord]) -> int:
    return EXIT_TOLERANCE if any(r.passed is False for r in records) else EXIT_OK


def write_csv(records: list[RunRecord], path: str | os.PathLike, timing: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    param_keys: list[str] = []
    for rec in records:
        for k in rec.params:
            if k not in param_keys:
                param_keys.append(k)
    param_keys.sort()
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["scenario", "quantity", *param_keys, *CSV_TAIL],
                                lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.row(param_keys, timing))
    return path


def summarize_csv(paths: Iterable[str | os.PathLike]) -> tuple[list[dict[str, Any]], int]:
    """Aggregate deviations per (file, scenario); returns rows and an exit status."""
    rows, status = [], EXIT_OK
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "rel_deviation" not in reader.fieldnames:
                raise ConfigError(f"{path}: not a run CSV (no rel_deviation column)")
            groups: dict[str, dict[str, Any]] = {}
            for row in reader:
                g = groups.setdefault(row["scenario"], {"file": str(path), "scenario": row["scenario"],
                                                        "records": 0, "checked": 0, "failed": 0,
                                                        "max_rel_deviation": 0.0})
                g["records"] += 1
                if row.get("passed"):
                    g["checked"] += 1
                    if row["passed"] != "true":
                        g["failed"] += 1
                if row.get("rel_deviation"):
                    g["max_rel_deviation"] = max(g["max_rel_deviation"], float(row["rel_deviation"]))
        for g in groups.values():
            if g["failed"]:
                status = EXIT_TOLERANCE
            rows.append(g)
    return rows, status


# --------------------------------------------------------------------------- convergence

DEFAULT_LADDER = ((16, 4, 16, 100.0), (64, 4, 16, 100.0), (128, 4, 16, 100.0), (256, 4, 16, 100.0))
TRUNCATION_FACTORS = (25.0, 50.0, 100.0, 200.0)


@dataclass
class ConvergenceReport:
    rows: list[dict[str, Any]]
    monotone: bool
    final_deviation: float

    def passed(self, tolerance: float = 1e-2) -> bool:
        return self.monotone and self.final_deviation < tolerance and all(
            r["picture_difference"] <= 1e-10 for r in self.rows)


def truncation_ladder(cell_height: float = 200.0 / 256, n_r: int = 4, n_phi: int = 16,
                      factors: Iterable[float] = TRUNCATION_FACTORS, impact: float = 1.0):
    """Rungs over half-length at a fixed axial cell height."""
    return tuple((max(1, round(2 * f * impact / cell_height)), n_r, n_phi, f) for f in factors)


def convergence_report(ladder=DEFAULT_LADDER, geometry: ab.ABGeometry | None = None,
                       rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = DEFAULT_ABS_TOL,
                       noise_floor: float = 1e-6) -> ConvergenceReport:
    """Lattice action difference on each rung ``(n_z, n_r, n_phi, L / a)``, both pictures.

    The clearance precondition is recorded rather than enforced so that coarse
    rungs (a single cell, say) still report their deviation.
    """
    g = geometry or ab.ABGeometry()
    e_phi = g.expected_delta_I
    rows = []
    for i, (n_z, n_r, n_phi, factor) in enumerate(ladder):
        lat = ab.build_lattice(g.magnet.radius, factor * g.impact, g.magnet.flux, n_z, n_r, n_phi)
        clear = g.impact - lat.magnet_radius >= ab.CLEARANCE_FACTOR * lat.max_cell_diameter
        pot = ab.lattice_action_potential_picture(lat, g, rel_tol, abs_tol, check_clearance=False)
        fld = ab.lattice_action_field_picture(lat, g, rel_tol, abs_tol, check_clearance=False)
        rows.append({
            "rung": i, "n_z": n_z, "n_r": n_r, "n_phi": n_phi, "length_factor": factor,
            "delta_I_potential": pot.delta_I, "delta_I_field": fld.delta_I, "expected": e_phi,
            "deviation": abs(pot.delta_I - e_phi) / abs(e_phi),
            "picture_difference": abs(pot.delta_I - fld.delta_I) / abs(e_phi),
            "clearance_ok": clear,
        })
    devs = [r["deviation"] for r in rows]
    monotone = all(b <= a + noise_floor for a, b in zip(devs, devs[1:]))
    return ConvergenceReport(rows, monotone, devs[-1])


def write_convergence_csv(report: ConvergenceReport, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(report.rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in report.rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return path
