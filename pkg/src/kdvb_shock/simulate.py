"""Coupled run: PDE solver, shift and diagnostics on one grid.

Each time step advances ``u`` with CNAB2, then ``X`` with a Heun step whose
predictor sees the updated field.  Energy-balance quantities are evaluated
every step; full records are kept every ``output_every`` steps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from . import diagnostics as dg
from .params import ShockParams
from .profile import ShockProfile, build_profile
from .shift import (Convention, ShiftOutOfDomainError, ShiftState, advance_shift,
                    shift_rhs, shifted_difference)
from .solver import (BlowUpError, FieldState, Grid, IMEXStepper, check_resolution,
                     domain_half_width, linear_operator, stable_dt)

logger = logging.getLogger(__name__)


# {{{ perturbation families

@dataclass(frozen=True)
class Perturbation:
    """Initial data ``u0`` relative to the profile.

    ``family`` is one of ``gaussian``, ``shifted_profile``, ``random_smooth``
    or ``none``.  Lengths are absolute; see :func:`named_perturbation` for
    the families used in the acceptance runs.
    """

    family: str = "gaussian"
    amplitude: float = 0.0
    width: float = 1.0
    offset: float = 0.0
    seed: int = 0
    modes: int = 6

    def initial_data(self, x, profile: ShockProfile) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "none":
            return profile(x)[0]
        if self.family == "gaussian":
            return profile(x)[0] + self.amplitude * np.exp(
                -(x - self.offset) ** 2 / (2.0 * self.width ** 2))
        if self.family == "shifted_profile":
            return profile(x - self.offset)[0]
        if self.family == "random_smooth":
            return profile(x)[0] + random_smooth(x, self.amplitude, self.width, self.offset,
                                                 self.seed, self.modes)
        raise ValueError(f"unknown perturbation family {self.family!r}")

    def support_radius(self, s: float, tol: float = 1e-10) -> float:
        """Distance from the origin beyond which the perturbation is below ``tol * s``."""
        if self.family in ("none", "shifted_profile"):
            return abs(self.offset)
        amp = max(abs(self.amplitude), tol * s)
        return abs(self.offset) + self.width * math.sqrt(2.0 * math.log(amp / (tol * s)))

    def mass(self, profile: ShockProfile, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(trapezoid(self.initial_data(x, profile) - profile(x)[0], x))


def random_smooth(x, amplitude, width, offset, seed, modes=6):
    """Gaussian-windowed random Fourier sum with sup norm ``amplitude``.

    Fully determined by ``seed``; wavenumbers are at most ``3/width``.
    """
    rng = np.random.default_rng(seed)
    k = rng.uniform(0.0, 3.0, size=modes) / width
    phase = rng.uniform(0.0, 2.0 * math.pi, size=modes)
    coef = rng.normal(size=modes)
    z = np.asarray(x, dtype=float) - offset
    window = np.exp(-z ** 2 / (2.0 * width ** 2))
    raw = window * np.sum(coef[:, None] * np.cos(k[:, None] * z[None, :] + phase[:, None]),
                          axis=0)
    # normalize on a fixed reference grid so the result is independent of x
    zr = np.linspace(-8.0 * width, 8.0 * width, 4001)
    ref = np.exp(-zr ** 2 / (2.0 * width ** 2)) * np.sum(
        coef[:, None] * np.cos(k[:, None] * zr[None, :] + phase[:, None]), axis=0)
    return amplitude * raw / np.max(np.abs(ref))


NAMED_FAMILIES = ("steady", "pulse-large", "shifted-profile", "shifted-profile-neg",
                  "random-smooth")


def named_perturbation(name: str, params: ShockParams, seed: int = 7) -> Perturbation:
    """Reproducible perturbation families, scaled by ``s`` and ``epsilon``.

    * ``steady``: no perturbation.
    * ``pulse-large``: Gaussian, amplitude ``2 s``, width ``2 eps/s``, centered.
    * ``shifted-profile`` / ``shifted-profile-neg``: ``u0 = u_tilde(x -/+ 2 eps/s)``.
    * ``random-smooth``: windowed random Fourier sum, amplitude ``s``, width ``2 eps/s``.
    """
    s, eps = params.s, params.epsilon
    if name == "steady":
        return Perturbation("none")
    if name == "pulse-large":
        return Perturbation("gaussian", amplitude=2.0 * s, width=2.0 * eps / s)
    if name == "shifted-profile":
        return Perturbation("shifted_profile", offset=2.0 * eps / s)
    if name == "shifted-profile-neg":
        return Perturbation("shifted_profile", offset=-2.0 * eps / s)
    if name == "random-smooth":
        return Perturbation("random_smooth", amplitude=s, width=2.0 * eps / s, seed=seed)
    raise ValueError(f"unknown perturbation family {name!r}; choose from {NAMED_FAMILIES}")


def auto_grid(params: ShockParams, perturbation: Perturbation, profile: ShockProfile,
              n: int, tol: float = 1e-10) -> Grid:
    """Domain sized for the profile tail, the perturbation support and the expected shift.

    The shift travel estimate is ``|mass| / (u_minus - u_plus) + eps/s``: mass is
    conserved and absorbed by a translation of the shock.
    """
    support = perturbation.support_radius(params.s, tol)
    probe = np.linspace(-support - 40 * params.epsilon / params.s,
                        support + 40 * params.epsilon / params.s, 20001)
    travel = abs(perturbation.mass(profile, probe)) / (2.0 * params.s) \
        + params.epsilon / params.s
    return Grid(domain_half_width(params, tol, support, travel), n)

# }}}


@dataclass
class RunSettings:
    T: float = 50.0
    cfl: float = 0.5
    output_every: int = 10
    convention: Convention = Convention.ENERGY_CONSISTENT
    safety_factor: float = 10.0
    shift_margin_fraction: float = 0.5
    dt: float | None = None
    split_flux: bool = True
    X0: float = 0.0


@dataclass
class SimulationResult:
    params: ShockParams
    grid: Grid
    settings: RunSettings
    records: list = field(default_factory=list)
    step_t: np.ndarray | None = None
    step_residual: np.ndarray | None = None
    shift: ShiftState | None = None
    final_state: FieldState | None = None
    dt: float = 0.0
    status: str = "ok"
    message: str = ""

    @property
    def completed(self) -> bool:
        return self.status == "ok"

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def run_simulation(params: ShockParams, grid: Grid, u0, settings: RunSettings | None = None,
                   profile: ShockProfile | None = None, progress=None) -> SimulationResult:
    """Advance ``u0`` to ``settings.T`` with the coupled shift.

    Aborts (keeping partial output) on blow-up or when the shift leaves the
    boundary margin; ``result.status`` then names the cause.
    """
    settings = settings or RunSettings()
    convention = Convention.parse(settings.convention)
    if profile is None:
        profile = build_profile(params)
    s, eps = params.s, params.epsilon
    x, dx = grid.x, grid.dx
    pu, pdu = profile(x)
    u_l, u_r = params.u_minus, params.u_plus
    u0 = np.asarray(u0, dtype=float)

    bound = settings.safety_factor * max(abs(u_l), abs(u_r), float(np.max(np.abs(u0))))
    op = linear_operator(grid, eps, params.delta)
    stepper = IMEXStepper(op, u_bound=bound, reference=pu if settings.split_flux else None)
    state = FieldState(0.0, u0.copy(), u_l, u_r, 0)
    check_resolution(state, grid, eps)

    if settings.dt is not None:
        dt0 = settings.dt
    else:
        dt0 = stable_dt(state, grid, settings.cfl, s)
    n_steps = max(1, int(math.ceil(settings.T / dt0 - 1e-9)))
    dt = settings.T / n_steps
    margin = settings.shift_margin_fraction * grid.half_width

    shift = ShiftState(settings.X0, 0.0, convention)
    psi = shifted_difference(state.u, grid, pu, shift.X, u_l, u_r, margin)
    shift.Xdot = shift_rhs(psi, pdu, dx, s, convention)
    shift.record(0.0)
    snap = dg.snapshot(psi, pu, pdu, shift.Xdot, s, eps, dx, profile.monotone)
    result = SimulationResult(params, grid, replace(settings, convention=convention),
                              shift=shift, dt=dt)
    cum_d = 0.0

    def make_record(t, step, snap, residual):
        return dg.DiagnosticsRecord(
            t=t, step=step, X=shift.X, Xdot=shift.Xdot, E=snap.E, D=snap.D,
            cumulative_D=cum_d, G=snap.E + dg.C_STAR * eps * cum_d,
            L2=math.sqrt(max(snap.E, 0.0)), L4=snap.L4, Linf=snap.Linf,
            I1=snap.I1, I2=snap.I2, I3=snap.I3, energy_rhs=snap.rhs,
            energy_residual=residual)

    result.records.append(make_record(0.0, 0, snap, 0.0))
    step_t = np.empty(n_steps)
    step_res = np.empty(n_steps)
    window_res = 0.0
    done = 0
    try:
        for n in range(n_steps):
            new_state = stepper.step(state, dt)
            x_pred = shift.X + dt * shift.Xdot
            psi_pred = shifted_difference(new_state.u, grid, pu, x_pred, u_l, u_r, margin)
            xdot_pred = shift_rhs(psi_pred, pdu, dx, s, convention)
            X_new = advance_shift(shift.Xdot, xdot_pred, shift.X, dt)
            psi = shifted_difference(new_state.u, grid, pu, X_new, u_l, u_r, margin)
            shift.X = X_new
            shift.Xdot = shift_rhs(psi, pdu, dx, s, convention)
            shift.record(new_state.t)

            new_snap = dg.snapshot(psi, pu, pdu, shift.Xdot, s, eps, dx, profile.monotone)
            res = dg.energy_balance_residual(snap.E, new_snap.E, snap.rhs, new_snap.rhs, dt)
            cum_d += 0.5 * (snap.D + new_snap.D) * dt
            step_t[n] = new_state.t
            step_res[n] = res
            window_res = max(window_res, res)
            state, snap = new_state, new_snap
            done = n + 1
            if done % settings.output_every == 0 or done == n_steps:
                result.records.append(make_record(state.t, done, snap, window_res))
                window_res = 0.0
                if progress is not None:
                    progress(state.t)
    except BlowUpError as exc:
        result.status, result.message = "blow-up", str(exc)
    except ShiftOutOfDomainError as exc:
        result.status, result.message = "shift-out-of-domain", f"t = {state.t:.6g}: {exc}"
    if result.status != "ok":
        logger.warning("run aborted: %s", result.message)
    result.step_t = step_t[:done]
    result.step_residual = step_res[:done]
    result.final_state = state
    return result


def simulate_family(params: ShockParams, family: str, n: int = 4096, settings=None,
                    profile: ShockProfile | None = None, grid: Grid | None = None,
                    seed: int = 7) -> SimulationResult:
    """Run one named perturbation family on an auto-sized (or given) grid."""
    if profile is None:
        profile = build_profile(params)
    pert = named_perturbation(family, params, seed)
    if grid is None:
        grid = auto_grid(params, pert, profile, n)
    u0 = pert.initial_data(grid.x, profile)
    return run_simulation(params, grid, u0, settings, profile)
