"""Batch front end: ``kdvb-shock {profile,simulate,verify,sweep}``.

Every subcommand reads an optional TOML config (see ``DEFAULT_CONFIG`` for
the full layout), writes plain files into ``--out`` and returns an exit code:

====  ==========================================================
0     every check passed
1     a certification check failed (reports are still written)
2     configuration or regime error, nothing computed
3     run aborted (blow-up or shift out of domain), partial output kept
====  ==========================================================

Output formats
--------------
``profile.dat``
    Whitespace-delimited text, one ``#`` header line naming the columns, then
    ``x u`` (two-column) or ``x u du`` (three-column) rows in ``repr`` precision.
``records.csv``
    One row per output time with the columns of
    :class:`~kdvb_shock.diagnostics.DiagnosticsRecord`.
``manifest.json``
    Config, config hash, package version, tolerances, decision knobs and the
    summary block.
``checkpoint.txt``
    Final field, see :func:`~kdvb_shock.solver.save_checkpoint`.
``plot_*.py``
    Generated matplotlib script that reads the data files; no images are made.

Nothing written depends on wall-clock time, so a fixed ``(config, seed)``
yields byte-identical files.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import diagnostics as dg
from .params import MONOTONE_RATIO_MAX, ParameterError, ShockParams, galilean_normalize, \
    make_params, params_for_ratio
from .profile import ProfileConstructionError, build_profile, burgers_numeric_profile, \
    burgers_profile, phase_plane_profile
from .shift import Convention
from .simulate import NAMED_FAMILIES, Perturbation, RunSettings, auto_grid, \
    named_perturbation, run_simulation
from .solver import Grid, check_half_width, linear_operator, profile_half_width, \
    save_checkpoint, steady_residual
from .verification import decay_check, envelope_check, poincare_equality_cases, \
    poincare_random_suite

logger = logging.getLogger("kdvb_shock")

WORKERS_ENV = "KDVB_SHOCK_WORKERS"

DEFAULT_CONFIG = {
    "params": {"epsilon": 1.0, "delta": 0.2, "u_minus": 1.0, "u_plus": -1.0},
    "grid": {"half_width": "auto", "n": 4096, "tail_tol": 1e-10},
    "time": {"T_final": 50.0, "cfl": 0.5, "output_every": 10, "dt": None},
    # ``name`` selects a documented family scaled by (s, epsilon) and
    # overrides the explicit fields; set it to "" to use them directly
    "perturbation": {"name": "pulse-large", "family": "gaussian", "amplitude": 2.0,
                     "width": 2.0, "offset": 0.0, "seed": 7},
    "shift": {"convention": "energy_consistent"},
    "tolerances": {
        "envelope": 1e-8,
        "decay": 1e-6,
        "route_agreement": 1e-6,
        "burgers_sup": 1e-8,
        "certificate_rel": 1e-3,
        # allowed rise of G on top of certificate_rel * E(0):
        # factor * (steady_residual * eps / s^2)^2, the energy of the discrete steady state
        "certificate_floor_factor": 100.0,
        "chain": 1e-8,
        "poincare_rel": 1e-10,
        "poincare_equality": 1e-12,
    },
    "solver": {"split_flux": True, "safety_factor": 10.0, "shift_margin_fraction": 0.5},
    "output": {"profile_columns": 3},
    "verify": {"ratios": [0.05, 0.1, 0.2, 0.25], "epsilon": 1.0, "s": 1.0, "count": 1000},
    "sweep": {"ratios": [0.05, 0.1, 0.2, 0.25], "epsilons": [1.0, 0.5, 0.25], "s": 1.0},
}


class ConfigError(ValueError):
    pass


# {{{ config

def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key!r} must be a table")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


class RunConfig:
    """Validated run configuration.

    ``data`` always holds the full nested mapping (defaults filled in), which
    is what goes into the manifest and the config hash.
    """

    def __init__(self, data: dict | None = None):
        self.data = _merge(DEFAULT_CONFIG, data or {})
        p = self.data["params"]
        try:
            self.lab_params = make_params(float(p["epsilon"]), float(p["delta"]),
                                          float(p["u_minus"]), float(p["u_plus"]))
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        self.params, self.transform = galilean_normalize(self.lab_params)
        g = self.data["grid"]
        if g["half_width"] != "auto" and not isinstance(g["half_width"], (int, float)):
            raise ConfigError("grid.half_width must be a number or \"auto\"")
        if int(g["n"]) < 16:
            raise ConfigError("grid.n must be >= 16")
        t = self.data["time"]
        if not float(t["T_final"]) > 0 or not float(t["cfl"]) > 0:
            raise ConfigError("time.T_final and time.cfl must be positive")
        Convention.parse(self.data["shift"]["convention"])

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        data = {}
        if path is not None:
            with open(path, "rb") as fh:
                try:
                    data = tomllib.load(fh)
                except tomllib.TOMLDecodeError as exc:
                    raise ConfigError(f"{path}: {exc}") from exc
        for section, values in (overrides or {}).items():
            data.setdefault(section, {}).update(values)
        return cls(data)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def config_hash(self) -> str:
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def tolerances(self) -> dict:
        return dict(self.data["tolerances"])

    @property
    def convention(self) -> Convention:
        return Convention.parse(self.data["shift"]["convention"])

    def perturbation(self) -> Perturbation:
        pert = self.data["perturbation"]
        if pert["name"]:
            if pert["name"] not in NAMED_FAMILIES:
                raise ConfigError(f"unknown perturbation name {pert['name']!r}; "
                                  f"choose from {NAMED_FAMILIES}")
            return named_perturbation(pert["name"], self.params, int(pert["seed"]))
        if pert["family"] not in ("gaussian", "shifted_profile", "random_smooth", "none"):
            raise ConfigError(f"unknown perturbation family {pert['family']!r}")
        return Perturbation(pert["family"], float(pert["amplitude"]), float(pert["width"]),
                            float(pert["offset"]), int(pert["seed"]))

    def settings(self) -> RunSettings:
        t, sv = self.data["time"], self.data["solver"]
        return RunSettings(T=float(t["T_final"]), cfl=float(t["cfl"]),
                           output_every=int(t["output_every"]), convention=self.convention,
                           safety_factor=float(sv["safety_factor"]),
                           shift_margin_fraction=float(sv["shift_margin_fraction"]),
                           dt=None if t["dt"] is None else float(t["dt"]),
                           split_flux=bool(sv["split_flux"]))

    def grid(self, perturbation: Perturbation, profile) -> Grid:
        g = self.data["grid"]
        n, tol = int(g["n"]), float(g["tail_tol"])
        if g["half_width"] == "auto":
            return auto_grid(self.params, perturbation, profile, n, tol)
        half_width = float(g["half_width"])
        if not check_half_width(self.params, half_width, tol):
            logger.warning("grid.half_width = %g is below the tail-sizing rule (%g)",
                           half_width, profile_half_width(self.params, tol))
        return Grid(half_width, n)

# }}}


# {{{ file writers

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _finite(value):
    return value if math.isfinite(value) else str(value)


def export_profile(path, profile, x, columns: int = 3) -> None:
    """Write ``x u`` or ``x u du`` rows as delimited text."""
    if columns not in (2, 3):
        raise ValueError("columns must be 2 or 3")
    u, du = profile(x)
    names = ("x", "u", "du")[:columns]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for row in zip(x, u, du):
            fh.write(" ".join(repr(float(v)) for v in row[:columns]) + "\n")


def read_profile(path) -> np.ndarray:
    return np.loadtxt(path, comments="#", ndmin=2)


def write_records_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dg.CSV_COLUMNS)
        for rec in records:
            writer.writerow(repr(float(v)) if isinstance(v, float) else v
                            for v in (getattr(rec, c) for c in dg.CSV_COLUMNS))


PLOT_RUN_SCRIPT = '''\
"""Plot a kdvb-shock run; generated file, edit freely."""
import sys

import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "records.csv"
data = np.genfromtxt(path, delimiter=",", names=True)
fig, ax = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
ax[0, 0].semilogy(data["t"], data["E"], label="E")
ax[0, 0].semilogy(data["t"], data["G"], label="G")
ax[0, 0].legend()
ax[0, 1].semilogy(data["t"], data["Linf"], label="sup |psi|")
ax[0, 1].legend()
ax[1, 0].plot(data["t"], data["X"], label="X")
ax[1, 0].legend()
ax[1, 1].semilogy(data["t"], np.abs(data["Xdot"]), label="|Xdot|")
ax[1, 1].legend()
for a in ax[1]:
    a.set_xlabel("t")
fig.tight_layout()
plt.show()
'''

PLOT_PROFILE_SCRIPT = '''\
"""Plot a kdvb-shock profile export; generated file, edit freely."""
import sys

import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "profile.dat"
data = np.loadtxt(path, comments="#", ndmin=2)
fig, ax = plt.subplots(1, data.shape[1] - 1, figsize=(10, 4), squeeze=False)
for j, name in enumerate(["u", "du"][: data.shape[1] - 1]):
    ax[0, j].plot(data[:, 0], data[:, j + 1])
    ax[0, j].set_xlabel("x")
    ax[0, j].set_title(name)
fig.tight_layout()
plt.show()
'''

PLOT_SWEEP_SCRIPT = '''\
"""Plot a kdvb-shock sweep table; generated file, edit freely."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
with open(path) as fh:
    rows = [r for r in csv.DictReader(fh) if r["linf_ratio"] not in ("", "nan")]
fig, ax = plt.subplots()
for eps in sorted({r["epsilon"] for r in rows}):
    sel = [r for r in rows if r["epsilon"] == eps]
    ax.semilogy([float(r["ratio"]) for r in sel], [float(r["linf_ratio"]) for r in sel],
                "o-", label=f"epsilon = {eps}")
ax.set_xlabel("r")
ax.set_ylabel("sup|psi(T)| / sup|psi(0)|")
ax.legend()
plt.show()
'''


def _write_script(path: Path, text: str) -> None:
    path.write_text(text)

# }}}


def _regime_message(params: ShockParams) -> str:
    return (f"regime check failed: the monotone condition "
            f"delta*(u_minus - u_plus)/(2*epsilon^2) <= {MONOTONE_RATIO_MAX} does not hold "
            f"(ratio = {params.regime_ratio:.6g}); pass --experimental-oscillatory to "
            f"proceed without certification")


def _manifest(config: RunConfig, command: str, extra: dict | None = None) -> dict:
    out = {"command": command, "version": __version__, "config": config.to_dict(),
           "config_hash": config.config_hash(), "tolerances": config.tolerances,
           "csv_schema_version": dg.CSV_SCHEMA_VERSION, "csv_columns": list(dg.CSV_COLUMNS),
           "normalized_params": config.params.to_dict(),
           "galilean_shift": {"shift_speed": config.transform.shift_speed,
                              "level_shift": config.transform.level_shift}}
    out.update(extra or {})
    return out


# {{{ profile

def run_profile(config: RunConfig, out: Path, experimental: bool = False) -> int:
    """Build and certify the profile; writes data, reports and a plot script."""
    out.mkdir(parents=True, exist_ok=True)
    params, tol = config.params, config.tolerances
    s, eps = params.s, params.epsilon
    if not params.is_monotone and not experimental:
        logger.error(_regime_message(params))
        return 2

    n = int(config.data["grid"]["n"])
    columns = int(config.data["output"]["profile_columns"])
    reports = {}
    try:
        if not params.is_monotone:
            profile = phase_plane_profile(params, allow_oscillatory=True)
            lo, hi = profile.x_edges
            half = min(-lo, hi, profile_half_width(params, 1e-10))
            reports["experimental"] = {"certified": False, "regime_ratio": params.regime_ratio,
                                       "note": "oscillatory profile, no envelope or tail "
                                               "certification applies"}
        elif params.delta == 0.0:
            profile = burgers_profile(params)
            half = profile_half_width(params, float(config.data["grid"]["tail_tol"]))
            reports["burgers_oracle"] = _burgers_oracle_report(params, tol["burgers_sup"])
        else:
            profile = build_profile(params)
            half = profile_half_width(params, float(config.data["grid"]["tail_tol"]))
            reports["route_agreement"] = _route_agreement_report(profile, params,
                                                                 tol["route_agreement"])
    except ProfileConstructionError as exc:
        logger.error("profile construction failed: %s", exc)
        _write_json(out / "profile_report.json",
                    {"passed": False, "failed_check": "construction", "error": str(exc)})
        return 1

    x = np.linspace(-half, half, n)
    export_profile(out / "profile.dat", profile, x, columns)
    _write_script(out / "plot_profile.py", PLOT_PROFILE_SCRIPT)
    if params.is_monotone:
        reports["envelope"] = envelope_check(profile, tol["envelope"]).to_dict()
        reports["decay"] = decay_check(profile, tol["decay"]).to_dict()

    failed = [name for name, rep in reports.items() if rep.get("passed") is False]
    for name, rep in reports.items():
        _write_json(out / f"{name}.json", rep)
    summary = {"passed": not failed and params.is_monotone, "failed_checks": failed,
               "certified": params.is_monotone, "route": profile.route,
               "params": params.to_dict(), "regime_ratio": params.regime_ratio,
               "samples": n, "half_width": half}
    _write_json(out / "profile_report.json", summary)
    _write_json(out / "manifest.json", _manifest(config, "profile", {"summary": summary}))
    for name in failed:
        logger.error("check failed: %s", name)
    if failed:
        return 1
    return 0


def _route_agreement_report(profile, params: ShockParams, tol: float) -> dict:
    other = phase_plane_profile(params)
    lo = max(profile.x_edges[0], other.x_edges[0])
    hi = min(profile.x_edges[1], other.x_edges[1])
    x = np.linspace(lo, hi, 20001)
    diff = np.abs(profile(x)[0] - other(x)[0])
    i = int(np.argmax(diff))
    return {"sup_distance": float(diff[i]), "at_x": float(x[i]), "window": [lo, hi],
            "tol": tol * params.s, "passed": bool(diff[i] <= tol * params.s)}


def _burgers_oracle_report(params: ShockParams, tol: float) -> dict:
    s, eps = params.s, params.epsilon
    x = np.linspace(-20.0 * eps / s, 20.0 * eps / s, 40001)
    numeric = burgers_numeric_profile(params)
    err = np.abs(numeric(x)[0] + s * np.tanh(s * x / (2.0 * eps)))
    return {"sup_error": float(err.max()), "window_half_width": 20.0 * eps / s,
            "tol": tol, "passed": bool(err.max() <= tol)}

# }}}


# {{{ simulate

def steady_floor(params, grid, profile) -> float:
    """Steady residual of the sampled profile, converted to a field amplitude ``* eps/s^2``."""
    op = linear_operator(grid, params.epsilon, params.delta)
    res = steady_residual(profile(grid.x)[0], grid, op, params.u_minus, params.u_plus)
    return res * params.epsilon / params.s ** 2


def summarize_run(result, tol: dict, profile) -> dict:
    """Certificate, chain, decay ratios and shift velocity of a finished run."""
    recs = result.records
    params = result.params
    s, eps = params.s, params.epsilon
    floor = steady_floor(params, result.grid, profile)
    cert = dg.contraction_certificate(recs, eps, tol["certificate_rel"],
                                      tol["certificate_floor_factor"] * floor ** 2)
    first, last = recs[0], recs[-1]

    def ratio(name):
        a, b = getattr(first, name), getattr(last, name)
        return b / a if a > 0 else math.nan

    t = result.series("t")
    xdot = np.abs(result.series("Xdot"))
    T = t[-1] if t.size else 0.0
    q1 = xdot[t <= 0.25 * T]
    q4 = xdot[t >= 0.75 * T]
    m1 = float(q1.mean()) if q1.size else math.nan
    m4 = float(q4.mean()) if q4.size else math.nan
    summary = {"status": result.status, "message": result.message, "t_final": float(T),
               "steps": int(result.final_state.step), "dt": result.dt,
               "grid": {"half_width": result.grid.half_width, "n": result.grid.n,
                        "dx": result.grid.dx},
               "certificate": cert,
               "lp_ratios": {"L2": _finite(ratio("L2")), "L4": _finite(ratio("L4")),
                             "Linf": _finite(ratio("Linf"))},
               "final_X": last.X, "final_abs_Xdot": abs(last.Xdot),
               "xdot_quarter_means": [_finite(m1), _finite(m4)],
               "max_energy_residual": float(result.step_residual.max())
               if result.step_residual.size else 0.0,
               "steady_floor": floor}
    if params.is_monotone:
        scale = max(first.E, 1.0) * s * s / eps
        summary["chain"] = dg.chain_check(recs, s, eps, tol["chain"] * scale)
    return summary


def run_simulate(config: RunConfig, out: Path, experimental: bool = False) -> int:
    out.mkdir(parents=True, exist_ok=True)
    params = config.params
    if not params.is_monotone and not experimental:
        logger.error(_regime_message(params))
        return 2
    profile = build_profile(params) if params.is_monotone else \
        phase_plane_profile(params, allow_oscillatory=True)
    pert = config.perturbation()
    grid = config.grid(pert, profile)
    u0 = pert.initial_data(grid.x, profile)
    settings = config.settings()
    logger.info("simulate: N = %d, L = %.6g, T = %g, convention = %s", grid.n,
                grid.half_width, settings.T, settings.convention.value)
    result = run_simulation(params, grid, u0, settings, profile)
    summary = summarize_run(result, config.tolerances, profile)
    summary["certified"] = params.is_monotone

    write_records_csv(out / "records.csv", result.records)
    save_checkpoint(out / "checkpoint.txt", result.final_state, grid, params,
                    extra={"X": repr(result.shift.X), "status": result.status})
    _write_script(out / "plot_run.py", PLOT_RUN_SCRIPT)
    knobs = {"dt": result.dt, "split_flux": settings.split_flux, "cfl": settings.cfl,
             "safety_factor": settings.safety_factor,
             "shift_margin_fraction": settings.shift_margin_fraction,
             "time_stepper": "CNAB2, second-order predictor-corrector start",
             "shift_stepper": "Heun", "interpolation": "cubic Lagrange",
             "perturbation": asdict(pert),
             "grid": {"half_width": grid.half_width, "n": grid.n}}
    _write_json(out / "manifest.json",
                _manifest(config, "simulate", {"knobs": knobs, "summary": summary}))
    if result.status != "ok":
        logger.error("run aborted: %s", result.message)
        return 3
    if params.is_monotone and not summary["certificate"]["passed"]:
        logger.error("contraction certificate failed: max rise %.3e > allowed %.3e",
                     summary["certificate"]["max_uphill"], summary["certificate"]["allowed"])
        return 1
    return 0

# }}}


# {{{ verify

def run_verify(config: RunConfig, out: Path, seed: int = 42) -> int:
    """Poincare suite plus envelope and tail certification across the ratio list."""
    out.mkdir(parents=True, exist_ok=True)
    tol, v = config.tolerances, config.data["verify"]
    suite = poincare_random_suite(seed=seed, count=int(v["count"]),
                                  rel_tol=tol["poincare_rel"])
    suite["equality_cases"] = poincare_equality_cases(tol=tol["poincare_equality"])
    suite["passed"] = suite["passed"] and suite["equality_cases"]["passed"]
    _write_json(out / "poincare.json", suite)

    profiles = []
    for r in v["ratios"]:
        params = params_for_ratio(float(r), float(v["epsilon"]), float(v["s"]))
        entry = {"ratio": float(r), "params": params.to_dict()}
        if not params.is_monotone:
            entry.update(passed=None, note="outside the monotone regime, skipped")
        else:
            prof = build_profile(params)
            env = envelope_check(prof, tol["envelope"])
            dec = decay_check(prof, tol["decay"])
            entry.update(envelope=env.to_dict(), decay=dec.to_dict(),
                         passed=bool(env.passed and dec.passed))
        profiles.append(entry)
    _write_json(out / "profiles.json", profiles)
    passed = suite["passed"] and all(p["passed"] is not False for p in profiles)
    _write_json(out / "manifest.json", _manifest(config, "verify", {
        "seed": seed, "summary": {"passed": passed, "poincare_passed": suite["passed"],
                                  "profiles_passed": [p["passed"] for p in profiles]}}))
    return 0 if passed else 1

# }}}


# {{{ sweep

SWEEP_COLUMNS = ("ratio", "epsilon", "delta", "s", "mode", "status", "envelope_passed",
                 "decay_passed", "certificate_passed", "chain_passed", "max_uphill",
                 "E0", "linf_ratio", "final_abs_Xdot", "final_X", "error")


def sweep_cells(config: RunConfig) -> list[dict]:
    sw = config.data["sweep"]
    return [{"ratio": float(r), "epsilon": float(e), "s": float(sw["s"]),
             "config": config.to_dict()}
            for r in sw["ratios"] for e in sw["epsilons"]]


def run_cell(cell: dict) -> dict:
    """One isolated sweep cell; never raises, failures land in the row."""
    params = params_for_ratio(cell["ratio"], cell["epsilon"], cell["s"])
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(ratio=cell["ratio"], epsilon=cell["epsilon"], delta=params.delta, s=params.s,
               mode="certified" if params.is_monotone else "experimental")
    data = copy.deepcopy(cell["config"])
    data["params"] = {"epsilon": params.epsilon, "delta": params.delta,
                      "u_minus": params.u_minus, "u_plus": params.u_plus}
    try:
        config = RunConfig(data)
        tol = config.tolerances
        if params.is_monotone:
            profile = build_profile(params)
            row["envelope_passed"] = envelope_check(profile, tol["envelope"]).passed
            row["decay_passed"] = decay_check(profile, tol["decay"]).passed
        else:
            profile = phase_plane_profile(params, allow_oscillatory=True)
        pert = config.perturbation()
        grid = config.grid(pert, profile)
        result = run_simulation(params, grid, pert.initial_data(grid.x, profile),
                                config.settings(), profile)
        summary = summarize_run(result, tol, profile)
        row.update(status=result.status, max_uphill=summary["certificate"]["max_uphill"],
                   E0=summary["certificate"]["E0"], linf_ratio=summary["lp_ratios"]["Linf"],
                   final_abs_Xdot=summary["final_abs_Xdot"], final_X=summary["final_X"])
        if params.is_monotone:
            row["certificate_passed"] = summary["certificate"]["passed"]
            row["chain_passed"] = summary["chain"]["passed"]
    except Exception as exc:  # a broken cell must not stop the sweep
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


def cell_passed(row: dict) -> bool:
    if row["mode"] == "experimental":
        return row["status"] != "error"
    return row["status"] == "ok" and all(
        row[k] is True for k in ("envelope_passed", "decay_passed", "certificate_passed",
                                 "chain_passed"))


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw)) if raw else default
    except ValueError:
        logger.warning("ignoring %s = %r", WORKERS_ENV, raw)
        return default


def run_sweep(config: RunConfig, out: Path, workers: int | None = None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    cells = sweep_cells(config)
    workers = workers or worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    for row in rows:
        row["passed"] = cell_passed(row)
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS + ("passed",),
                                lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _write_script(out / "plot_sweep.py", PLOT_SWEEP_SCRIPT)
    passed = all(r["passed"] for r in rows)
    _write_json(out / "manifest.json", _manifest(config, "sweep", {
        "workers_env": WORKERS_ENV, "summary": {
            "passed": passed, "cells": len(rows),
            "failed_cells": [[r["ratio"], r["epsilon"]] for r in rows if not r["passed"]],
            "experimental_cells": [[r["ratio"], r["epsilon"]] for r in rows
                                   if r["mode"] == "experimental"]}}))
    return 0 if passed else 1

# }}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdvb-shock", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("profile", "build and certify the shock profile"),
                       ("simulate", "run the coupled PDE/shift simulation"),
                       ("verify", "Poincare and envelope certification suites"),
                       ("sweep", "parameter sweep over (r, epsilon)")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, help="perturbation seed (verify: suite seed)")
        p.add_argument("--convention", choices=("energy", "literal"),
                       help="shift convention (overrides the config)")
        p.add_argument("--experimental-oscillatory", action="store_true",
                       help="allow parameters outside the monotone regime, uncertified")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    overrides = {}
    if args.seed is not None and args.command != "verify":
        overrides["perturbation"] = {"seed": args.seed}
    if args.convention is not None:
        overrides["shift"] = {"convention": Convention.parse(args.convention).value}
    try:
        config = RunConfig.load(args.config, overrides)
    except (ConfigError, OSError) as exc:
        logger.error("config error: %s", exc)
        return 2
    if args.command == "profile":
        code = run_profile(config, args.out, args.experimental_oscillatory)
    elif args.command == "simulate":
        code = run_simulate(config, args.out, args.experimental_oscillatory)
    elif args.command == "verify":
        code = run_verify(config, args.out, 42 if args.seed is None else args.seed)
    else:
        code = run_sweep(config, args.out)
    print(f"{args.command}: {'PASS' if code == 0 else 'FAIL'} (exit {code}), "
          f"outputs in {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
