"""Functionals of ``psi = u(t, . + X) - u_tilde`` along a run.

All integrals use the trapezoid rule on the uniform grid; ``psi_x`` uses
centered differences (one-sided at the two ends).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .profile import LAMBDA_HIGH, LAMBDA_LOW
from .shift import trapezoid

#: Contraction constant ``2 sqrt(2) - 5/2``.
C_STAR = 2.0 * math.sqrt(2.0) - 2.5


@dataclass
class DiagnosticsRecord:
    t: float
    step: int
    X: float
    Xdot: float
    E: float
    D: float
    cumulative_D: float
    G: float
    L2: float
    L4: float
    Linf: float
    I1: float
    I2: float
    I3: float
    energy_rhs: float
    energy_residual: float

    def row(self) -> dict:
        return asdict(self)


CSV_COLUMNS = tuple(DiagnosticsRecord.__dataclass_fields__)
CSV_SCHEMA_VERSION = 1


def gradient(psi, dx: float) -> np.ndarray:
    return np.gradient(psi, dx)


def l2_and_dissipation(psi, dx: float) -> tuple[float, float]:
    psi = np.asarray(psi, dtype=float)
    dpsi = gradient(psi, dx)
    return trapezoid(psi * psi, dx), trapezoid(dpsi * dpsi, dx)


def lp_norms(psi, dx: float, p_list=(2, 4, math.inf)) -> dict:
    """Discrete ``L^p`` norms; ``p <= 2`` is allowed but flagged."""
    psi = np.abs(np.asarray(psi, dtype=float))
    out = {}
    for p in p_list:
        if p <= 2:
            warnings.warn(f"L^{p}: decay is only asserted for p > 2", UserWarning,
                          stacklevel=2)
        if math.isinf(p):
            out[p] = float(np.max(psi)) if psi.size else 0.0
        else:
            out[p] = trapezoid(psi ** p, dx) ** (1.0 / p)
    return out


def _lp(psi_abs, dx, p):
    return trapezoid(psi_abs ** p, dx) ** (1.0 / p)


class NonMonotoneProfileError(ValueError):
    pass


def z_diagnostics(psi, profile_u, profile_du, s: float, epsilon: float, dx: float,
                  cutoff: float = 1e-12, dpsi=None) -> tuple[float, float, float]:
    """Integrals in the profile coordinate ``z = u_tilde(x)``, computed on the x-grid.

    Returns ``I1 = int psi u_tilde' dx``, ``I2 = int psi^2 (-u_tilde') dx``
    (``= int w^2 dz`` over ``(-s, s)``) and
    ``I3 = int (s - u_tilde)(u_tilde + s) psi_x^2 / (-u_tilde') dx``.  The
    ``I3`` integrand is dropped where ``-u_tilde' < cutoff * s^2 / epsilon``.
    """
    du = np.asarray(profile_du, dtype=float)
    if np.any(du > 0.0):
        raise NonMonotoneProfileError("z-coordinate needs a non-increasing profile")
    psi = np.asarray(psi, dtype=float)
    if dpsi is None:
        dpsi = gradient(psi, dx)
    i1 = trapezoid(psi * du, dx)
    i2 = trapezoid(-psi * psi * du, dx)
    keep = -du >= cutoff * s * s / epsilon
    q = (s - profile_u) * (profile_u + s)
    integrand = np.zeros_like(psi)
    integrand[keep] = q[keep] * dpsi[keep] ** 2 / (-du[keep])
    return i1, i2, trapezoid(integrand, dx)


def energy_rhs(xdot: float, i1: float, i2: float, d: float, epsilon: float) -> float:
    """``Xdot I1 + I2/2 - eps D``, the right side of ``d/dt (1/2) E``."""
    return xdot * i1 + 0.5 * i2 - epsilon * d


def energy_balance_residual(e_prev: float, e_next: float, rhs_prev: float, rhs_next: float,
                            dt: float) -> float:
    """``|dE/(2 dt) - (rhs_prev + rhs_next)/2|``."""
    return abs((e_next - e_prev) / (2.0 * dt) - 0.5 * (rhs_prev + rhs_next))


@dataclass
class Snapshot:
    """Per-step quantities needed for records and the energy balance."""

    E: float
    D: float
    I1: float
    I2: float
    I3: float
    rhs: float
    L4: float
    Linf: float


def snapshot(psi, profile_u, profile_du, xdot, s, epsilon, dx, monotone=True) -> Snapshot:
    dpsi = gradient(psi, dx)
    e = trapezoid(psi * psi, dx)
    d = trapezoid(dpsi * dpsi, dx)
    if monotone:
        i1, i2, i3 = z_diagnostics(psi, profile_u, profile_du, s, epsilon, dx, dpsi=dpsi)
    else:
        # no z-coordinate for an oscillating profile
        i1 = trapezoid(psi * profile_du, dx)
        i2 = trapezoid(-psi * psi * profile_du, dx)
        i3 = math.nan
    a = np.abs(psi)
    return Snapshot(e, d, i1, i2, i3, energy_rhs(xdot, i1, i2, d, epsilon),
                    _lp(a, dx, 4), float(np.max(a)))


# {{{ series-level checks

def cumulative_trapezoid(t, y) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def certificate_series(t, E, D, epsilon: float) -> np.ndarray:
    return np.asarray(E, dtype=float) + C_STAR * epsilon * cumulative_trapezoid(t, D)


def max_uphill(series) -> tuple[float, int]:
    """Largest rise ``G(t) - min_{t' <= t} G(t')`` and the index where it occurs."""
    g = np.asarray(series, dtype=float)
    rise = g - np.minimum.accumulate(g)
    i = int(np.argmax(rise))
    return float(rise[i]), i


def contraction_certificate(records, epsilon: float, tol_rel: float = 1e-3,
                            tol_abs: float = 0.0) -> dict:
    """Monotonicity report for ``G = E + C* eps int_0^t D``.

    The allowed rise is ``tol_rel * E(0) + tol_abs``; ``tol_abs`` matters only
    when ``E(0)`` sits at the discretization floor (steady runs).
    """
    t = np.array([r.t for r in records])
    E = np.array([r.E for r in records])
    D = np.array([r.D for r in records])
    G = certificate_series(t, E, D, epsilon)
    rise, idx = max_uphill(G)
    e0 = float(E[0]) if E.size else 0.0
    allowed = tol_rel * e0 + tol_abs
    return {"E0": e0, "G_final": float(G[-1]) if G.size else 0.0, "max_uphill": rise,
            "max_uphill_t": float(t[idx]) if t.size else 0.0, "tol_rel": tol_rel,
            "tol_abs": tol_abs,
            "allowed": allowed, "passed": bool(rise <= allowed), "C_star": C_STAR}


def chain_check(records, s: float, epsilon: float, tol: float) -> dict:
    """Poincare step and envelope transfer at every record.

    ``-(1/(4s)) I1^2 + I2/2 <= I3/4 + tol`` and
    ``lam_low I3 <= eps D + tol``, ``eps D <= lam_high I3 + tol``.
    """
    poincare, lower, upper = [], [], []
    for r in records:
        poincare.append(0.25 * r.I3 - (-(r.I1 ** 2) / (4.0 * s) + 0.5 * r.I2))
        lower.append(epsilon * r.D - LAMBDA_LOW * r.I3)
        upper.append(LAMBDA_HIGH * r.I3 - epsilon * r.D)
    worst = {"poincare": float(np.min(poincare)), "transfer_lower": float(np.min(lower)),
             "transfer_upper": float(np.min(upper))}
    return {"worst_margins": worst, "tol": tol,
            "passed": bool(all(v >= -tol for v in worst.values()))}

# }}}
