"""IMEX finite differences for ``u_t + (u^2/2)_x = epsilon u_xx - delta u_xxx``.

The linear part is advanced by Crank-Nicolson, the flux by second-order
Adams-Bashforth (CNAB2).  Unknowns are the ``N`` grid nodes of
``[-L, L]``; two ghost layers on each side are pinned to the far-field
states, so each step costs one pentadiagonal solve.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .profile import LAMBDA_LOW

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = "# kdvb-checkpoint v1"


class BlowUpError(RuntimeError):
    """The solution left the configured sup-norm safety bound."""


@dataclass(frozen=True)
class Grid:
    half_width: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"grid needs at least 16 nodes, got {self.n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)


def profile_half_width(params, tol: float = 1e-10) -> float:
    """Smallest ``L`` with ``s exp(-(sqrt2-1) s L / eps) <= tol``."""
    return params.epsilon * math.log(1.0 / tol) / (LAMBDA_LOW * params.s)


def domain_half_width(params, tol: float = 1e-10, support_radius: float = 0.0,
                      shift_margin: float = 0.0) -> float:
    """Auto-sized half width: profile tail + perturbation support + shift travel."""
    return profile_half_width(params, tol) + support_radius + shift_margin


def check_half_width(params, half_width: float, tol: float = 1e-10) -> bool:
    """True if the slower tail bound is below ``tol`` at ``|x| = half_width``."""
    return params.s * math.exp(-LAMBDA_LOW * params.s * half_width / params.epsilon) <= tol


@dataclass
class FieldState:
    t: float
    u: np.ndarray
    u_left: float
    u_right: float
    step: int = 0

    def padded(self, ghosts: int = 2) -> np.ndarray:
        return np.concatenate([np.full(ghosts, self.u_left), self.u,
                               np.full(ghosts, self.u_right)])

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.u.copy(), self.u_left, self.u_right, self.step)


# {{{ spatial operators

def _d2(up, dx):
    return (up[3:-1] - 2.0 * up[2:-2] + up[1:-3]) / dx ** 2


def _d3(up, dx):
    return (up[4:] - 2.0 * up[3:-1] + 2.0 * up[1:-3] - up[:-4]) / (2.0 * dx ** 3)


@dataclass
class LinearOperator:
    """``epsilon D2 - delta D3`` on the node unknowns.

    ``bands`` is the pentadiagonal matrix in LAPACK ``(2, 2)`` banded layout;
    the ghost-node contributions form the affine part ``boundary(u_l, u_r)``.
    """

    grid: Grid
    epsilon: float
    delta: float
    bands: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, dx = self.grid.n, self.grid.dx
        c2 = self.epsilon / dx ** 2
        c3 = self.delta / (2.0 * dx ** 3)
        # row i: coefficients of u_{i-2} .. u_{i+2}
        coeffs = (c3, c2 - 2.0 * c3, -2.0 * c2, c2 + 2.0 * c3, -c3)
        ab = np.zeros((5, n))
        # LAPACK band storage: ab[2 + i - j, j] = A[i, j]
        for k, c in zip(range(-2, 3), coeffs):
            ab[2 - k, :] = c
        ab[0, :2] = 0.0
        ab[1, :1] = 0.0
        ab[3, -1:] = 0.0
        ab[4, -2:] = 0.0
        self.bands = ab
        self._coeffs = coeffs

    def boundary(self, u_left: float, u_right: float) -> np.ndarray:
        c_m2, c_m1, _, c_p1, c_p2 = self._coeffs
        b = np.zeros(self.grid.n)
        b[0] = (c_m2 + c_m1) * u_left
        b[1] = c_m2 * u_left
        b[-1] = (c_p2 + c_p1) * u_right
        b[-2] = c_p2 * u_right
        return b

    def apply(self, u, u_left: float, u_right: float) -> np.ndarray:
        up = np.concatenate([[u_left, u_left], u, [u_right, u_right]])
        dx = self.grid.dx
        return self.epsilon * _d2(up, dx) - self.delta * _d3(up, dx)

    def apply_homogeneous(self, u) -> np.ndarray:
        return self.apply(u, 0.0, 0.0)

    def shifted_bands(self, scale: float) -> np.ndarray:
        """Banded storage of ``I + scale * A``."""
        ab = scale * self.bands
        ab[2] += 1.0
        return ab


def linear_operator(grid: Grid, epsilon: float, delta: float) -> LinearOperator:
    return LinearOperator(grid, epsilon, delta)


def flux_divergence(state: FieldState, grid: Grid) -> np.ndarray:
    """Centered conservative ``(u_{i+1}^2 - u_{i-1}^2) / (4 dx)``."""
    return _flux_div(state.u, state.u_left, state.u_right, grid.dx)


def _flux_div(u, u_left, u_right, dx):
    q = 0.5 * np.concatenate([[u_left], u, [u_right]]) ** 2
    return (q[2:] - q[:-2]) / (2.0 * dx)


def stable_dt(state: FieldState, grid: Grid, cfl: float, s: float) -> float:
    if not 0.0 < cfl <= 1.0:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    speed = max(float(np.max(np.abs(state.u))), s)
    return cfl * grid.dx / speed


def cell_peclet(state: FieldState, grid: Grid, epsilon: float) -> float:
    if epsilon == 0.0:
        return math.inf
    return float(np.max(np.abs(state.u))) * grid.dx / epsilon

# }}}


# {{{ time stepping

class IMEXStepper:
    """CNAB2 stepper carrying the flux history.

    With ``reference=None`` the whole flux is explicit (AB2).  Given a
    reference field ``r`` (normally the sampled profile), the flux is split as
    ``(u^2/2)_x = (r u)_x + ((u - r)^2/2 - r^2/2)_x``: the linear part joins
    the Crank-Nicolson operator and only the remainder is extrapolated.  The
    spatial stencil is identical in both cases.  Plain CNAB2 with centered
    advection is weakly unstable on the far-field state ``u_minus > 0``; the
    split leaves an explicit advection speed ``|u - r|`` that decays with the
    perturbation.

    The first step (and any step after ``reset``) is a second-order
    predictor-corrector: Crank-Nicolson for the implicit part with the
    explicit term taken first at ``t_n`` and then averaged with its value at
    the predicted state.  Later steps use variable-step AB2.
    """

    def __init__(self, operator: LinearOperator, u_bound: float | None = None,
                 reference=None, flux: bool = True):
        self.operator = operator
        self.grid = operator.grid
        self.u_bound = u_bound
        self.flux = flux
        self.reference = None if reference is None else np.asarray(reference, dtype=float)
        self._bands = operator.bands.copy()
        if self.reference is not None and flux:
            half = 0.5 / self.grid.dx
            r = self.reference
            self._bands[1, 1:] -= half * r[1:]
            self._bands[3, :-1] += half * r[:-1]
        self._prev_flux = None
        self._prev_dt = None
        self._cached = (None, None)
        self.solves = 0

    def reset(self):
        self._prev_flux = None
        self._prev_dt = None

    @property
    def _split(self) -> bool:
        return self.reference is not None and self.flux

    def _linear_flux(self, u, u_left, u_right):
        ru = np.concatenate([[u_left * u_left], self.reference * u, [u_right * u_right]])
        return (ru[2:] - ru[:-2]) / (2.0 * self.grid.dx)

    def implicit_apply(self, u, u_left, u_right):
        out = self.operator.apply(u, u_left, u_right)
        if self._split:
            out -= self._linear_flux(u, u_left, u_right)
        return out

    def implicit_boundary(self, u_left, u_right):
        b = self.operator.boundary(u_left, u_right)
        if self._split:
            b[0] += u_left * u_left / (2.0 * self.grid.dx)
            b[-1] -= u_right * u_right / (2.0 * self.grid.dx)
        return b

    def explicit_term(self, u, u_left, u_right):
        if not self.flux:
            return np.zeros_like(u)
        f = _flux_div(u, u_left, u_right, self.grid.dx)
        if self._split:
            f -= self._linear_flux(u, u_left, u_right)
        return f

    def _solve(self, rhs, dt):
        if self._cached[0] != dt:
            ab = -0.5 * dt * self._bands
            ab[2] += 1.0
            self._cached = (dt, ab)
        self.solves += 1
        return solve_banded((2, 2), self._cached[1], rhs, check_finite=False)

    def _cn_solve(self, state, dt, explicit):
        ul, ur = state.u_left, state.u_right
        rhs = state.u + 0.5 * dt * self.implicit_apply(state.u, ul, ur) \
            + 0.5 * dt * self.implicit_boundary(ul, ur) - dt * explicit
        return self._solve(rhs, dt)

    def step(self, state: FieldState, dt: float) -> FieldState:
        if not dt > 0:
            raise ValueError("dt must be positive")
        ul, ur = state.u_left, state.u_right
        f_n = self.explicit_term(state.u, ul, ur)
        if self._prev_flux is None:
            u_star = self._cn_solve(state, dt, f_n)
            f_star = self.explicit_term(u_star, ul, ur)
            u_new = self._cn_solve(state, dt, 0.5 * (f_n + f_star))
        else:
            omega = dt / self._prev_dt
            f_ext = (1.0 + 0.5 * omega) * f_n - 0.5 * omega * self._prev_flux
            u_new = self._cn_solve(state, dt, f_ext)
        self._prev_flux = f_n
        self._prev_dt = dt
        new = FieldState(state.t + dt, u_new, ul, ur, state.step + 1)
        if self.u_bound is not None:
            peak = float(np.max(np.abs(u_new)))
            if not (peak <= self.u_bound):
                raise BlowUpError(
                    f"sup|u| = {peak:.6g} exceeds the safety bound {self.u_bound:.6g} "
                    f"at t = {new.t:.6g} (step {new.step})")
        return new


def imex_step(state: FieldState, dt: float, operator: LinearOperator,
              stepper: IMEXStepper | None = None) -> FieldState:
    """One CNAB2 step; pass a persistent ``stepper`` to keep the AB2 history."""
    if stepper is None:
        stepper = IMEXStepper(operator)
    return stepper.step(state, dt)


def steady_residual(profile_values, grid: Grid, operator: LinearOperator,
                    u_left: float, u_right: float) -> float:
    """Discrete L2 norm of ``A u - F(u)`` for ``u`` the sampled profile."""
    u = np.asarray(profile_values, dtype=float)
    r = operator.apply(u, u_left, u_right) - _flux_div(u, u_left, u_right, grid.dx)
    return math.sqrt(grid.dx * float(np.dot(r, r)))


def check_resolution(state: FieldState, grid: Grid, epsilon: float) -> float:
    pe = cell_peclet(state, grid, epsilon)
    if pe > 2.0:
        warnings.warn(f"cell Peclet number {pe:.3g} > 2: the centered flux is under-resolved",
                      RuntimeWarning, stacklevel=2)
    return pe

# }}}


# {{{ checkpoints

def save_checkpoint(path, state: FieldState, grid: Grid, params=None, extra=None) -> None:
    """Write a text checkpoint: one header line, one JSON line, then one value per line.

    Values use ``repr`` (17 significant digits) so reloading is lossless.
    """
    header = {"t": repr(state.t), "step": state.step, "n": grid.n,
              "half_width": repr(grid.half_width), "u_left": repr(state.u_left),
              "u_right": repr(state.u_right)}
    if params is not None:
        header["params"] = {k: v for k, v in params.to_dict().items()}
    if extra:
        header["extra"] = extra
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CHECKPOINT_MAGIC + "\n")
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        fh.writelines(repr(float(v)) + "\n" for v in state.u)


def load_checkpoint(path) -> tuple[FieldState, Grid, dict]:
    with open(path, encoding="utf-8") as fh:
        magic = fh.readline().rstrip("\n")
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a kdvb checkpoint (got {magic!r})")
        header = json.loads(fh.readline())
        u = np.array([float(line) for line in fh if line.strip()])
    grid = Grid(float(header["half_width"]), int(header["n"]))
    if u.size != grid.n:
        raise ValueError(f"{path}: expected {grid.n} values, found {u.size}")
    state = FieldState(float(header["t"]), u, float(header["u_left"]),
                       float(header["u_right"]), int(header["step"]))
    return state, grid, header

# }}}
