"""Monotone viscous-dispersive shock profiles.

The primary construction parameterizes the profile by its own value
``a = u(x)`` and solves the first-order ODE for the slope ``h(a) = u'(x)``

    h'(a) = (epsilon - (a - s)(a + s) / (2 h)) / delta,

then recovers ``x(a)`` from ``dx/da = 1/h``.  A second, independent route
shoots the heteroclinic orbit of ``delta u'' = epsilon u' - (u^2 - s^2)/2`` in
the phase plane; a third is the ``delta = 0`` closed form.  All profiles live
in the normalized frame ``u_minus = s = -u_plus`` and are anchored so that
``u(0) = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

from .params import ParameterError, RegimeError, ShockParams

#: Envelope constants: ``LAMBDA_LOW*(s-u)(u+s) <= -epsilon*u' <= LAMBDA_HIGH*(s-u)(u+s)``.
LAMBDA_LOW = math.sqrt(2.0) - 1.0
LAMBDA_HIGH = 1.0


class ProfileConstructionError(RuntimeError):
    """The numerical construction of a profile failed a built-in check."""


class SingularityError(ZeroDivisionError):
    """The slope ODE was evaluated on its singular line ``h = 0``."""


class EndpointSlopes(NamedTuple):
    at_minus_s: float
    at_plus_s: float
    burgers_limit: bool = False


def _require_normalized(params: ShockParams) -> None:
    if not params.is_normalized:
        raise ParameterError(
            "profiles are built in the standing frame u_minus = -u_plus; "
            "apply galilean_normalize first")


def endpoint_slopes(params: ShockParams) -> EndpointSlopes:
    """Values of ``h'`` at ``a = -s`` and ``a = +s``.

    ``h'(-s)`` is the negative root of ``delta m^2 - epsilon m - s = 0`` (the
    decay exponent at the saddle ``u_plus``), ``h'(s)`` the smaller root of
    ``delta m^2 - epsilon m + s = 0`` (the slow exponent at the node
    ``u_minus``).  Rationalized forms are used so ``delta -> 0`` is benign; at
    ``delta = 0`` the Burgers limits ``-s/epsilon`` and ``s/epsilon`` are
    returned with ``burgers_limit=True``.
    """
    _require_normalized(params)
    eps, delta, s = params.epsilon, params.delta, params.s
    disc = eps * eps - 4.0 * delta * s
    if disc < 0.0:
        raise RegimeError(
            f"oscillatory regime (epsilon^2 < 4 delta s): ratio {params.regime_ratio:.6g} > 1/4")
    at_minus = -2.0 * s / (eps + math.sqrt(eps * eps + 4.0 * delta * s))
    at_plus = 2.0 * s / (eps + math.sqrt(disc))
    return EndpointSlopes(at_minus, at_plus, delta == 0.0)


def fast_node_exponent(params: ShockParams) -> float:
    """Larger root of ``delta m^2 - epsilon m + s = 0`` (infinite when ``delta = 0``)."""
    eps, delta, s = params.epsilon, params.delta, params.s
    if delta == 0.0:
        return math.inf
    return (eps + math.sqrt(max(eps * eps - 4.0 * delta * s, 0.0))) / (2.0 * delta)


def h_ode_rhs(a, h, params: ShockParams):
    """Right-hand side of the slope ODE ``dh/da``."""
    s = params.s
    if params.delta <= 0.0:
        raise ParameterError("the slope ODE needs delta > 0")
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr == 0.0):
        raise SingularityError("h = 0: the slope ODE is singular at the end states")
    a = np.asarray(a, dtype=float)
    out = (params.epsilon - (a - s) * (a + s) / (2.0 * h_arr)) / params.delta
    return out if out.ndim else float(out)


def envelope_bounds(a, params: ShockParams):
    """Lower/upper parabolas bracketing ``h(a)``: ``p_1(a) <= h(a) <= p_{sqrt2-1}(a)``."""
    s, eps = params.s, params.epsilon
    base = (np.asarray(a, dtype=float) - s) * (np.asarray(a, dtype=float) + s) / eps
    return LAMBDA_HIGH * base, LAMBDA_LOW * base


# {{{ slope table

@dataclass(frozen=True)
class HTable:
    """Slope table of a monotone profile.

    ``a_samples`` is strictly decreasing, matching increasing ``x_samples``;
    ``x_samples`` is anchored at ``x(a=0) = 0``.
    """

    params: ShockParams
    a_samples: np.ndarray
    h_samples: np.ndarray
    x_samples: np.ndarray
    endpoint_slopes: EndpointSlopes
    eta: float
    rtol: float
    nfev: int


def _tanh_spaced(s: float, eta: float, n: int) -> np.ndarray:
    # roughly uniform in x because the profile is tanh-like
    xi_max = math.atanh(1.0 - eta / s)
    return s * np.tanh(np.linspace(-xi_max, xi_max, n))


def solve_h(params: ShockParams, rtol: float = 1e-11, eta: float | None = None,
            n_samples: int = 4001, envelope_tol: float = 1e-8) -> HTable:
    """Integrate the slope ODE across ``(-s + eta, s - eta)``.

    The integration runs in increasing ``a``, starting at the saddle end from
    the linearization ``h = h'(-s) (a + s)``.  In that direction both end
    points are attracting for the slope ODE, so errors in the start value
    and in the integrator are damped rather than amplified.  ``x(a)`` is
    integrated alongside via ``dx/da = 1/h``.
    """
    _require_normalized(params)
    params.require_monotone("solve_h")
    if params.delta <= 0.0:
        raise ParameterError("solve_h needs delta > 0; use burgers_profile for delta = 0")
    s, eps, delta = params.s, params.epsilon, params.delta
    if eta is None:
        eta = 1e-6 * s
    if not 0.0 < eta < s:
        raise ValueError(f"eta must lie in (0, s), got {eta}")
    slopes = endpoint_slopes(params)

    def rhs(a, y):
        h = y[0]
        return [(eps - (a - s) * (a + s) / (2.0 * h)) / delta, 1.0 / h]

    a0, a1 = -s + eta, s - eta
    h0 = slopes.at_minus_s * eta
    sol = solve_ivp(rhs, (a0, a1), [h0, 0.0], method="DOP853", rtol=rtol,
                    atol=[1e-6 * rtol * abs(h0), 1e-3 * rtol * eps / s],
                    dense_output=True)
    if not sol.success:
        raise ProfileConstructionError(f"slope ODE integration failed: {sol.message}")
    if np.any(sol.y[0] >= 0.0):
        raise ProfileConstructionError("slope left the half plane h < 0")

    a = _tanh_spaced(s, eta, n_samples)[::-1]
    y = sol.sol(a)
    h, x = y[0], y[1] - sol.sol(0.0)[1]

    lower, upper = envelope_bounds(a, params)
    tol = envelope_tol * s * s / eps
    if np.any(h < lower - tol) or np.any(h > upper + tol):
        raise ProfileConstructionError(
            "slope table left the envelope p_1 <= h <= p_(sqrt2-1); integrator failure")
    if np.any(np.diff(x) <= 0.0):
        raise ProfileConstructionError("recovered x(a) is not strictly increasing")
    return HTable(params, a, h, x, slopes, eta, rtol, sol.nfev)

# }}}


# {{{ profile objects

class ShockProfile:
    """Traveling-wave profile with tail extensions.

    Evaluation inside the knot window is cubic Hermite interpolation of
    ``u(x)`` with the exact slopes ``u'`` as derivative data; outside it the
    profile continues as ``u_pm -/+ C exp(mu (x - x_edge))`` using the
    linearization exponents ``tail_rates = (mu_left > 0, mu_right < 0)``.

    ``x_samples``, ``u_samples`` and ``du_samples`` hold the profile on the
    uniform grid it was requested on.
    """

    def __init__(self, params: ShockParams, knots_x, knots_u, knots_du,
                 tail_rates: tuple[float, float], x_samples=None, route: str = "h-ode",
                 monotone: bool = True):
        _require_normalized(params)
        self.params = params
        self.route = route
        self.monotone = monotone
        self.knots_x = np.asarray(knots_x, dtype=float)
        self.knots_u = np.asarray(knots_u, dtype=float)
        self.knots_du = np.asarray(knots_du, dtype=float)
        self.tail_rates = (float(tail_rates[0]), float(tail_rates[1]))
        self._interp = _shape_preserving_hermite(self.knots_x, self.knots_u, self.knots_du,
                                                 monotone)
        if x_samples is None:
            x_samples = self.knots_x
        self._set_samples(x_samples)

    def _set_samples(self, x_samples):
        self.x_samples = np.asarray(x_samples, dtype=float)
        self.u_samples, self.du_samples = self(self.x_samples)

    def resampled(self, x_samples) -> "ShockProfile":
        import copy
        other = copy.copy(self)
        other._set_samples(_grid_x(x_samples))
        return other

    @property
    def x_edges(self) -> tuple[float, float]:
        return float(self.knots_x[0]), float(self.knots_x[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = self.params.s
        mu_l, mu_r = self.tail_rates
        x_l, x_r = self.x_edges
        u = np.empty_like(x)
        du = np.empty_like(x)
        inside = (x >= x_l) & (x <= x_r)
        u[inside] = self._interp(x[inside])
        du[inside] = self._interp(x[inside], 1)

        left = x < x_l
        c_l = s - self.knots_u[0]
        if self.monotone:
            e_l = c_l * np.exp(mu_l * (x[left] - x_l))
            u[left] = s - e_l
            du[left] = -mu_l * e_l
        else:
            u[left] = s
            du[left] = 0.0

        right = x > x_r
        e_r = (self.knots_u[-1] + s) * np.exp(mu_r * (x[right] - x_r))
        u[right] = -s + e_r
        du[right] = mu_r * e_r
        return (u, du) if u.ndim else (float(u), float(du))

    def end_state_gaps(self, x):
        """``(s - u, u + s)`` without cancellation in the exponential tails."""
        x = np.asarray(x, dtype=float)
        s = self.params.s
        u, _ = self(x)
        gap_l, gap_r = s - u, u + s
        if self.monotone:
            x_l, x_r = self.x_edges
            mu_l, mu_r = self.tail_rates
            left, right = x < x_l, x > x_r
            gap_l[left] = (s - self.knots_u[0]) * np.exp(mu_l * (x[left] - x_l))
            gap_r[right] = (self.knots_u[-1] + s) * np.exp(mu_r * (x[right] - x_r))
        return gap_l, gap_r

    def second_derivative(self, x):
        """``u''`` from the integrated profile equation ``eps u' - delta u'' = (u^2 - s^2)/2``."""
        u, du = self(x)
        p = self.params
        return (p.epsilon * du - 0.5 * (u * u - p.s * p.s)) / p.delta


class BurgersProfile(ShockProfile):
    """Closed-form viscous Burgers profile ``u = -s tanh(s x / (2 epsilon))``."""

    def __init__(self, params: ShockParams, x_samples=None):
        _require_normalized(params)
        if params.delta != 0.0:
            raise ParameterError(f"burgers_profile needs delta = 0, got {params.delta}")
        self.params = params
        self.route = "burgers-closed-form"
        self.monotone = True
        rate = params.s / params.epsilon
        self.tail_rates = (rate, -rate)
        if x_samples is None:
            x_samples = np.linspace(-20.0 / rate, 20.0 / rate, 2001)
        self._set_samples(x_samples)

    @property
    def x_edges(self):
        return -math.inf, math.inf

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s, eps = self.params.s, self.params.epsilon
        y = s * x / (2.0 * eps)
        u = -s * np.tanh(y)
        with np.errstate(over="ignore"):
            du = -(s * s / (2.0 * eps)) / np.cosh(y) ** 2
        return (u, du) if u.ndim else (float(u), float(du))

    def end_state_gaps(self, x):
        y = self.params.s * np.asarray(x, dtype=float) / self.params.epsilon
        s = self.params.s
        with np.errstate(over="ignore"):
            return 2.0 * s / (1.0 + np.exp(-y)), 2.0 * s / (1.0 + np.exp(y))

    def second_derivative(self, x):
        s, eps = self.params.s, self.params.epsilon
        y = s * np.asarray(x, dtype=float) / (2.0 * eps)
        with np.errstate(over="ignore"):
            return (s ** 3 / (2.0 * eps * eps)) * np.tanh(y) / np.cosh(y) ** 2


def _shape_preserving_hermite(x, u, du, monotone: bool):
    """Hermite cubic with exact slopes; PCHIP fallback if it could overshoot."""
    if not monotone:
        return CubicHermiteSpline(x, u, du)
    secant = np.diff(u) / np.diff(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = du[:-1] / secant
        beta = du[1:] / secant
    # Fritsch-Carlson sufficient condition for a monotone cubic
    ok = (secant < 0) & (alpha >= 0) & (beta >= 0) & (alpha ** 2 + beta ** 2 <= 9.0)
    if np.all(ok):
        return CubicHermiteSpline(x, u, du)
    warnings.warn("Hermite data violate the monotone-cubic condition; falling back to PCHIP",
                  RuntimeWarning, stacklevel=3)
    return PchipInterpolator(x, u)


def _grid_x(grid_spec):
    if grid_spec is None:
        return None
    if hasattr(grid_spec, "x"):
        return np.asarray(grid_spec.x, dtype=float)
    if isinstance(grid_spec, tuple) and len(grid_spec) == 2:
        half_width, n = grid_spec
        return np.linspace(-half_width, half_width, int(n))
    return np.asarray(grid_spec, dtype=float)


def eval_profile(profile: ShockProfile, x):
    return profile(x)

# }}}


# {{{ constructions

def recover_x(table: HTable, grid_spec=None) -> ShockProfile:
    """Turn a slope table into a spatial profile anchored at ``u(0) = 0``."""
    slopes = table.endpoint_slopes
    # a decreases along the table, so reversing nothing: x is already increasing
    return ShockProfile(table.params, table.x_samples, table.a_samples, table.h_samples,
                        (slopes.at_plus_s, slopes.at_minus_s), _grid_x(grid_spec),
                        route="h-ode")


def build_profile(params: ShockParams, grid_spec=None, **solve_kw) -> ShockProfile:
    """Profile by the primary route for ``delta > 0``, closed form for ``delta = 0``."""
    if params.delta == 0.0:
        return burgers_profile(params, grid_spec)
    return recover_x(solve_h(params, **solve_kw), grid_spec)


def burgers_profile(params: ShockParams, grid_spec=None) -> BurgersProfile:
    return BurgersProfile(params, _grid_x(grid_spec))


def burgers_numeric_profile(params: ShockParams, half_width: float | None = None,
                            rtol: float = 1e-13, knot_spacing: float | None = None
                            ) -> ShockProfile:
    """Integrate ``epsilon u' = (u^2 - s^2)/2`` from ``u(0) = 0`` in both directions.

    Independent numerical check on the closed form; ``delta`` must be zero.
    """
    _require_normalized(params)
    if params.delta != 0.0:
        raise ParameterError("burgers_numeric_profile needs delta = 0")
    s, eps = params.s, params.epsilon
    if half_width is None:
        half_width = 30.0 * eps / s
    if knot_spacing is None:
        knot_spacing = 2e-3 * eps / s

    def rhs(x, u):
        return 0.5 * (u * u - s * s) / eps

    n = int(math.ceil(half_width / knot_spacing)) + 1
    halves = []
    for sign in (-1.0, 1.0):
        xs = sign * np.linspace(0.0, half_width, n)
        sol = solve_ivp(rhs, (0.0, sign * half_width), [0.0], method="DOP853", rtol=rtol,
                        atol=1e-16 * s, t_eval=xs)
        if not sol.success:
            raise ProfileConstructionError(f"Burgers ODE integration failed: {sol.message}")
        halves.append((sol.t, sol.y[0]))
    x = np.concatenate([halves[0][0][::-1], halves[1][0][1:]])
    u = np.concatenate([halves[0][1][::-1], halves[1][1][1:]])
    rate = s / eps
    return ShockProfile(params, x, u, rhs(x, u), (rate, -rate), route="burgers-ode")


def phase_plane_profile(params: ShockParams, domain_half_width: float | None = None,
                        dx: float | None = None, *, eta: float | None = None,
                        rtol: float = 1e-12, allow_oscillatory: bool = False,
                        knot_spacing: float | None = None) -> ShockProfile:
    """Shoot the heteroclinic orbit in the ``(u, u')`` plane.

    Starts at ``u = -s + eta`` on the stable eigendirection of the saddle
    ``u_plus`` and integrates toward decreasing ``x``; in that direction the
    node (or spiral, for ratio > 1/4) at ``u_minus`` attracts.  The result is
    translated so that ``u(0) = 0``.
    """
    _require_normalized(params)
    if params.delta <= 0.0:
        raise ParameterError("phase-plane shooting needs delta > 0")
    monotone = params.is_monotone
    if not monotone and not allow_oscillatory:
        params.require_monotone("phase_plane_profile")
    s, eps, delta = params.s, params.epsilon, params.delta
    if eta is None:
        eta = 1e-8 * s
    mu_r = -2.0 * s / (eps + math.sqrt(eps * eps + 4.0 * delta * s))

    def rhs(x, y):
        u, v = y
        return [v, (eps * v - 0.5 * (u * u - s * s)) / delta]

    end_tol = 1e-12 * s

    def reached_left_state(x, y):
        return (s - y[0]) - end_tol if monotone else 1.0
    reached_left_state.terminal = True

    def went_wrong(x, y):
        return y[1] if monotone else 1.0  # u' must stay negative
    went_wrong.terminal = True

    # the exponents bound the length of the orbit; generous cap
    span = 200.0 * eps / s + (0.0 if monotone else 400.0 * delta / eps)
    sol = solve_ivp(rhs, (0.0, -span), [-s + eta, mu_r * eta], method="DOP853",
                    rtol=rtol, atol=1e-15 * s, dense_output=True,
                    events=[reached_left_state, went_wrong])
    if not sol.success:
        raise ProfileConstructionError(f"phase-plane integration failed: {sol.message}")
    if monotone and sol.t_events[1].size:
        raise ProfileConstructionError("shooting orbit lost monotonicity (u' >= 0)")
    x_end = sol.t[-1]
    if monotone and not sol.t_events[0].size:
        raise ProfileConstructionError("shooting orbit did not reach u_minus within the span")

    x_zero = brentq(lambda x: sol.sol(x)[0], x_end, 0.0, xtol=1e-15, rtol=1e-15)
    if knot_spacing is None:
        knot_spacing = 2e-3 * eps / s
    n = int(math.ceil((0.0 - x_end) / knot_spacing)) + 1
    xs = np.linspace(x_end, 0.0, n)
    uv = sol.sol(xs)
    uv[:, -1] = (-s + eta, mu_r * eta)
    if monotone:
        mu_l = endpoint_slopes(params).at_plus_s
    else:
        mu_l = math.inf
    x_samples = None
    if domain_half_width is not None:
        if dx is None:
            dx = knot_spacing
        n_grid = int(round(2.0 * domain_half_width / dx)) + 1
        x_samples = np.linspace(-domain_half_width, domain_half_width, n_grid)
    return ShockProfile(params, xs - x_zero, uv[0], uv[1], (mu_l, mu_r), x_samples,
                        route="phase-plane", monotone=monotone)

# }}}
