"""Floating-point certification of the profile and Poincare inequalities.

* ``envelope_check``: ``(sqrt2-1)(s-u)(u+s) <= -epsilon u' <= (s-u)(u+s)``.
* ``decay_check``: two-sided exponential tail bounds on ``u`` and ``u'`` with
  rates between ``(sqrt2-1) s/epsilon`` and ``2 s/epsilon``, plus fitted rates.
* ``poincare_check``/``poincare_random_suite``: the weighted inequality
  ``int f^2 <= 1/2 int (y-a)(b-y) f'^2 + (int f)^2/(b-a)`` on ``[a, b]``.

None of this is interval arithmetic; every check carries an explicit tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import legendre

from .profile import LAMBDA_HIGH, LAMBDA_LOW, ShockProfile


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# {{{ envelope

@dataclass
class EnvelopeReport:
    """Worst signed margins (in units of ``-epsilon u'``, i.e. of ``s^2``)."""

    worst_lower_margin: float
    worst_lower_x: float
    worst_upper_margin: float
    worst_upper_x: float
    tolerance: float
    n_samples: int
    passed: bool

    def to_dict(self):
        return _jsonable(asdict(self))


def envelope_margins(u, du, params):
    """Pointwise margins ``(-eps u' - lam_low*q, lam_high*q + eps u')`` with ``q = (s-u)(u+s)``."""
    s, eps = params.s, params.epsilon
    q = (s - u) * (u + s)
    flux = -eps * du
    return flux - LAMBDA_LOW * q, LAMBDA_HIGH * q - flux


def envelope_check(profile: ShockProfile, tolerance: float = 1e-8, x=None) -> EnvelopeReport:
    """Check the envelope at every sample of ``profile``.

    ``tolerance`` is relative to ``s**2``.  Samples are the profile's grid and,
    for tabulated profiles, its interpolation knots as well.
    """
    params = profile.params
    if x is None:
        parts = [profile.x_samples]
        if hasattr(profile, "knots_x"):
            parts.append(profile.knots_x)
        x = np.concatenate(parts)
    x = np.asarray(x, dtype=float)
    u, du = profile(x)
    lower, upper = envelope_margins(u, du, params)
    tol = tolerance * params.s ** 2
    il, iu = int(np.argmin(lower)), int(np.argmin(upper))
    return EnvelopeReport(
        worst_lower_margin=float(lower[il]), worst_lower_x=float(x[il]),
        worst_upper_margin=float(upper[iu]), worst_upper_x=float(x[iu]),
        tolerance=tol, n_samples=int(x.size),
        passed=bool(lower[il] >= -tol and upper[iu] >= -tol))

# }}}


# {{{ exponential tails

def rate_bracket(params) -> tuple[float, float]:
    """Admissible tail decay rates ``[(sqrt2-1) s/eps, 2 s/eps]``."""
    return LAMBDA_LOW * params.s / params.epsilon, 2.0 * LAMBDA_HIGH * params.s / params.epsilon


def tail_bounds(x, params):
    """Lower/upper bounds for the end-state gap and for ``-u'`` at ``x``."""
    s, eps = params.s, params.epsilon
    slow, fast = rate_bracket(params)
    ax = np.abs(np.asarray(x, dtype=float))
    gap_lo = s * np.exp(-fast * ax)
    gap_hi = s * np.exp(-slow * ax)
    slope_lo = LAMBDA_LOW * s * s / eps * np.exp(-fast * ax)
    slope_hi = 2.0 * LAMBDA_HIGH * s * s / eps * np.exp(-slow * ax)
    return gap_lo, gap_hi, slope_lo, slope_hi


@dataclass
class TailResult:
    side: str
    gap_lower_ok: bool
    gap_upper_ok: bool
    slope_lower_ok: bool
    slope_upper_ok: bool
    worst_gap_ratio_lower: float   # min of gap / lower bound (>= 1 - tol to pass)
    worst_gap_ratio_upper: float   # max of gap / upper bound (<= 1 + tol to pass)
    worst_slope_ratio_lower: float
    worst_slope_ratio_upper: float
    fitted_rate: float
    fit_points: int
    rate_in_bracket: bool

    @property
    def passed(self) -> bool:
        return (self.gap_lower_ok and self.gap_upper_ok and self.slope_lower_ok
                and self.slope_upper_ok and self.rate_in_bracket)


@dataclass
class DecayReport:
    left: TailResult
    right: TailResult
    rate_interval: tuple[float, float]
    tolerance: float
    window: tuple[float, float]
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.left.passed and self.right.passed

    def to_dict(self):
        out = _jsonable(asdict(self))
        out["left"]["passed"] = self.left.passed
        out["right"]["passed"] = self.right.passed
        out["passed"] = self.passed
        return out


def default_tail_grid(params, floor: float = 1e-9, dx: float | None = None) -> np.ndarray:
    """Symmetric grid wide enough for the slow rate to reach ``floor * s``."""
    slow, _ = rate_bracket(params)
    half = math.log(1.0 / floor) / slow
    if dx is None:
        dx = 0.01 * params.epsilon / params.s
    n = 2 * int(math.ceil(half / dx)) + 1
    return np.linspace(-half, half, n)


def fit_decay_rate(x, gap, window, s):
    """Least-squares slope of ``log(gap)`` against ``|x|`` on the window samples."""
    lo, hi = window[0] * s, window[1] * s
    sel = (gap >= lo) & (gap <= hi) & np.isfinite(gap)
    if np.count_nonzero(sel) < 3:
        return math.nan, int(np.count_nonzero(sel))
    slope, _ = np.polyfit(np.abs(x[sel]), np.log(gap[sel]), 1)
    return float(-slope), int(np.count_nonzero(sel))


def decay_check(profile: ShockProfile, tolerance: float = 1e-6, x=None,
                window: tuple[float, float] = (1e-8, 1e-2)) -> DecayReport:
    """Check the six exponential tail inequalities and fit the tail rates.

    Bounds are compared multiplicatively: ``value >= lower*(1 - tolerance)``
    and ``value <= upper*(1 + tolerance)``.  ``window`` is the range of the
    end-state gap (relative to ``s``) used for the rate fit.
    """
    params = profile.params
    s = params.s
    notes = []
    if window[1] > 0.05:
        notes.append(f"fit window cap {window[1]:g}*s reaches into the nonlinear core; "
                     "fitted rates may not be tail rates")
    if x is None:
        x = default_tail_grid(params, floor=min(window[0], 1e-9))
    x = np.asarray(x, dtype=float)
    gap_l, gap_r = profile.end_state_gaps(x)
    _, du = profile(x)
    gap_lo, gap_hi, slope_lo, slope_hi = tail_bounds(x, params)
    slope = -du
    bracket = rate_bracket(params)

    def side(name, sel, gap):
        g = gap[sel]
        with np.errstate(divide="ignore", invalid="ignore"):
            r_lo = g / gap_lo[sel]
            r_hi = g / gap_hi[sel]
            d_lo = slope[sel] / slope_lo[sel]
            d_hi = slope[sel] / slope_hi[sel]
        rate, npts = fit_decay_rate(x[sel], g, window, s)
        if npts < 3:
            notes.append(f"{name} tail: fewer than 3 samples inside the fit window")
        in_bracket = bool(np.isfinite(rate) and bracket[0] * (1 - tolerance) <= rate
                          <= bracket[1] * (1 + tolerance))
        return TailResult(
            side=name,
            gap_lower_ok=bool(np.all(r_lo >= 1 - tolerance)),
            gap_upper_ok=bool(np.all(r_hi <= 1 + tolerance)),
            slope_lower_ok=bool(np.all(d_lo >= 1 - tolerance)),
            slope_upper_ok=bool(np.all(d_hi <= 1 + tolerance)),
            worst_gap_ratio_lower=float(np.min(r_lo)),
            worst_gap_ratio_upper=float(np.max(r_hi)),
            worst_slope_ratio_lower=float(np.min(d_lo)),
            worst_slope_ratio_upper=float(np.max(d_hi)),
            fitted_rate=rate, fit_points=npts, rate_in_bracket=in_bracket)

    left = side("left", x <= 0.0, gap_l)
    right = side("right", x >= 0.0, gap_r)
    for n in notes:
        warnings.warn(n, RuntimeWarning, stacklevel=2)
    return DecayReport(left, right, bracket, tolerance, tuple(window), notes)

# }}}


# {{{ Poincare-type inequality

class QuadratureOrderError(ValueError):
    pass


@dataclass
class PoincareResult:
    lhs: float
    rhs: float
    margin: float


def _as_function_pair(f, a, b, cheb_degree=128):
    """Normalize the accepted inputs to a ``(f, f')`` pair of callables."""
    if isinstance(f, tuple) and len(f) == 2 and all(callable(g) for g in f):
        return f
    if hasattr(f, "deriv") and callable(f):
        return f, f.deriv()
    if callable(f):
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * np.arange(cheb_degree + 1)
                                                       / cheb_degree)
        values = np.asarray(f(nodes), dtype=float)
    else:
        values = np.asarray(f, dtype=float)
    # values at Chebyshev-Lobatto points of [a, b], ordered from b down to a
    n = values.size - 1
    t = np.cos(np.pi * np.arange(n + 1) / n)
    coef = C.chebfit(t, values, n)
    dcoef = C.chebder(coef) * (2.0 / (b - a))

    def to_t(y):
        return (2.0 * np.asarray(y, dtype=float) - (a + b)) / (b - a)

    return (lambda y: C.chebval(to_t(y), coef)), (lambda y: C.chebval(to_t(y), dcoef))


def gauss_nodes(a: float, b: float, order: int, subintervals: int = 1):
    t, w = legendre.leggauss(order)
    edges = np.linspace(a, b, subintervals + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wy = (half[:, None] * w[None, :]).ravel()
    return y, wy


def poincare_check(f, interval, quadrature_order: int = 64,
                   subintervals: int = 1) -> PoincareResult:
    """Evaluate both sides of the weighted Poincare inequality on ``[a, b]``.

    ``f`` may be a ``(f, df)`` pair of callables, a numpy polynomial object,
    a plain callable (differentiated through a Chebyshev interpolant), or an
    array of values at the Chebyshev-Lobatto points ``cos(pi k/n)`` mapped to
    ``[a, b]``.
    """
    if quadrature_order < 2:
        raise QuadratureOrderError(f"quadrature order must be >= 2, got {quadrature_order}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError("interval must satisfy a < b")
    func, dfunc = _as_function_pair(f, a, b)
    y, w = gauss_nodes(a, b, quadrature_order, subintervals)
    fy = np.asarray(func(y), dtype=float) * np.ones_like(y)
    dfy = np.asarray(dfunc(y), dtype=float) * np.ones_like(y)
    lhs = float(np.dot(w, fy * fy))
    mean_term = float(np.dot(w, fy)) ** 2 / (b - a)
    rhs = 0.5 * float(np.dot(w, (y - a) * (b - y) * dfy * dfy)) + mean_term
    return PoincareResult(lhs, rhs, rhs - lhs)


def _random_case(rng, family_spec):
    kinds = list(family_spec.get("families", ("polynomial", "trigonometric")))
    kind = kinds[int(rng.integers(len(kinds)))]
    a = float(rng.uniform(-10.0, 10.0))
    b = a + float(rng.uniform(0.1, 10.0))
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    if kind == "polynomial":
        deg = int(rng.integers(0, family_spec.get("max_degree", 6) + 1))
        coef = rng.normal(size=deg + 1)
        # Chebyshev basis on [a, b] keeps the conditioning sane on far intervals
        poly = C.Chebyshev(coef, domain=[a, b])
        return kind, (a, b), {"chebyshev_coefficients": coef.tolist()}, poly
    modes = int(rng.integers(1, family_spec.get("max_modes", 4) + 1))
    amp = rng.normal(size=modes)
    freq = rng.uniform(0.0, family_spec.get("max_frequency", 8.0), size=modes)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=modes)
    const = float(rng.normal())

    def f(y):
        z = (np.asarray(y, dtype=float)[..., None] - mid) / half
        return const + np.sum(amp * np.sin(math.pi * freq * z + phase), axis=-1)

    def df(y):
        z = (np.asarray(y, dtype=float)[..., None] - mid) / half
        return np.sum(amp * (math.pi * freq / half) * np.cos(math.pi * freq * z + phase), axis=-1)

    info = {"constant": const, "amplitudes": amp.tolist(), "frequencies": freq.tolist(),
            "phases": phase.tolist(), "center": mid, "half_width": half}
    return kind, (a, b), info, (f, df)


def poincare_equality_cases(intervals=((0.0, 1.0), (-1.0, 2.0), (-3.0, -0.5)),
                            quadrature_order: int = 64, tol: float = 1e-12) -> dict:
    """Margins for the two extremal families: constants and centered linear functions.

    Both sides agree exactly for ``f = c`` and for ``f = y - (a+b)/2``.
    """
    cases = []
    for a, b in intervals:
        mid = 0.5 * (a + b)
        for kind, f in (("constant", C.Chebyshev([1.0], domain=[a, b])),
                        ("linear", C.Chebyshev.fit([a, b], [a - mid, b - mid], 1,
                                                   domain=[a, b]))):
            res = poincare_check(f, (a, b), quadrature_order)
            cases.append({"family": kind, "interval": [a, b], "lhs": res.lhs,
                          "rhs": res.rhs, "margin": res.margin})
    worst = max(abs(c["margin"]) for c in cases)
    return _jsonable({"cases": cases, "max_abs_margin": worst, "tol": tol,
                      "passed": worst <= tol})


def poincare_random_suite(seed: int = 42, count: int = 1000, family_spec: dict | None = None,
                          quadrature_order: int = 64, subintervals: int = 4,
                          rel_tol: float = 1e-10) -> dict:
    """Draw random polynomials (degree <= 6) and trigonometric sums and check the inequality.

    A case fails when ``margin < -rel_tol * scale`` with ``scale = max(lhs, rhs, 1e-300)``.
    The result is deterministic for a fixed ``seed``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    family_spec = dict(family_spec or {})
    rng = np.random.default_rng(seed)
    violations = []
    worst = math.inf
    for i in range(count):
        kind, interval, info, f = _random_case(rng, family_spec)
        res = poincare_check(f, interval, quadrature_order, subintervals)
        scale = max(abs(res.lhs), abs(res.rhs), 1e-300)
        worst = min(worst, res.margin / scale)
        if res.margin < -rel_tol * scale:
            violations.append({"index": i, "family": kind, "interval": list(interval),
                               "coefficients": info, "lhs": res.lhs, "rhs": res.rhs,
                               "margin": res.margin})
    return _jsonable({"seed": seed, "count": count, "violations": violations,
                      "n_violations": len(violations), "worst_relative_margin": worst,
                      "rel_tol": rel_tol, "quadrature_order": quadrature_order,
                      "subintervals": subintervals, "passed": not violations})

# }}}
