"""Test-side oracles written independently of the package internals."""

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline


def tanh_profile(x, epsilon, s):
    """Closed-form viscous Burgers shock ``-s tanh(s x / (2 eps))`` and its slope."""
    z = s * np.asarray(x, dtype=float) / (2.0 * epsilon)
    return -s * np.tanh(z), -s * s / (2.0 * epsilon) / np.cosh(z) ** 2


def shooting_profile(epsilon, delta, s, x_max=None):
    """Heteroclinic by shooting from the saddle ``u = -s`` with an implicit integrator.

    ``delta u'' = eps u' - (u^2 - s^2)/2``; at ``u = -s`` the linearization
    ``delta mu^2 - eps mu - s = 0`` has one negative root, the decaying
    direction for ``x -> +inf``.  Integrating backward in ``x`` from a point
    on that eigenline recovers the whole orbit.  Returns a callable ``x ->
    u`` anchored so that ``u(0) = 0``.
    """
    mu = (epsilon - math.sqrt(epsilon ** 2 + 4.0 * delta * s)) / (2.0 * delta)
    eta = 1e-9 * s
    y0 = [-s + eta, mu * eta]
    x_max = x_max or 60.0 * epsilon / s

    def rhs(x, y):
        u, v = y
        return [v, (epsilon * v - 0.5 * (u * u - s * s)) / delta]

    def near_left(x, y):
        return s - y[0] - 1e-11 * s

    near_left.terminal = True
    sol = solve_ivp(rhs, (0.0, -x_max), y0, method="Radau", rtol=1e-12, atol=1e-15,
                    events=near_left, dense_output=True)
    xs = np.linspace(sol.t[-1], 0.0, 200001)
    us = sol.sol(xs)[0]
    # anchor: locate u = 0 and translate
    i = int(np.argmin(np.abs(us)))
    lo, hi = xs[max(i - 2, 0)], xs[min(i + 2, xs.size - 1)]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if sol.sol(mid)[0] > 0.0:
            lo = mid
        else:
            hi = mid
    x0 = 0.5 * (lo + hi)
    spline = CubicSpline(xs - x0, us)
    return spline, (xs[0] - x0, xs[-1] - x0)


def gaussian_energy(amplitude, width):
    """``int psi^2`` and ``int psi_x^2`` for ``psi = A exp(-x^2/(2 w^2))``."""
    return (amplitude ** 2 * width * math.sqrt(math.pi),
            amplitude ** 2 * math.sqrt(math.pi) / (2.0 * width))
