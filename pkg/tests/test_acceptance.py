"""Acceptance criteria, one test per criterion.

Each test appends a PASS/FAIL line to the terminal summary (and prints it
with ``-s``).  The long simulations are shared through ``runs.family_run``.
"""

import math

import numpy as np
import pytest

from kdvb_shock import diagnostics as dg
from kdvb_shock.params import normalized_params, params_for_ratio
from kdvb_shock.profile import (LAMBDA_HIGH, LAMBDA_LOW, build_profile,
                                burgers_numeric_profile, phase_plane_profile)
from kdvb_shock.simulate import RunSettings, auto_grid, named_perturbation, run_simulation
from kdvb_shock.solver import FieldState, Grid, IMEXStepper, linear_operator, steady_residual
from kdvb_shock.verification import (decay_check, envelope_check, poincare_equality_cases,
                                     poincare_random_suite)

from acceptance_log import report
from oracles import tanh_profile
from runs import ACCEPTANCE_FAMILIES, PARAMS, family_run, reference_profile

RATIOS = (0.05, 0.1, 0.2, 0.25)
EPSILONS = (1.0, 0.5, 0.25)
SWEEP = [params_for_ratio(r, e) for r in RATIOS for e in EPSILONS]


def test_c01_envelope():
    worst = math.inf
    ok = True
    for p in SWEEP:
        rep = envelope_check(build_profile(p), tolerance=1e-8)
        worst = min(worst, rep.worst_lower_margin, rep.worst_upper_margin)
        ok &= rep.passed
    report(1, "envelope certification", ok, f"{len(SWEEP)} profiles, worst margin {worst:.2e}")
    assert ok


def test_c02_tails():
    ok = True
    rates = []
    for p in SWEEP:
        rep = decay_check(build_profile(p), tolerance=1e-6)
        ok &= rep.passed
        rates.append((rep.left.fitted_rate * p.epsilon, rep.right.fitted_rate * p.epsilon))
    lo = min(min(r) for r in rates)
    hi = max(max(r) for r in rates)
    report(2, "tail certification", ok,
           f"fitted rates * eps/s in [{lo:.4f}, {hi:.4f}] within [{LAMBDA_LOW:.4f}, 2]")
    assert ok


def test_c03_burgers_oracle():
    errs = []
    for eps, s in ((1.0, 1.0), (0.5, 1.0), (1.0, 2.0)):
        p = normalized_params(eps, 0.0, s)
        x = np.linspace(-20 * eps / s, 20 * eps / s, 40001)
        errs.append(np.max(np.abs(burgers_numeric_profile(p)(x)[0] - tanh_profile(x, eps, s)[0])))
    worst = max(errs)
    ok = worst <= 1e-8
    report(3, "Burgers oracle", ok, f"sup error {worst:.2e} <= 1e-8")
    assert ok


def test_c04_route_agreement():
    prof = reference_profile()
    other = phase_plane_profile(PARAMS)
    lo = max(prof.x_edges[0], other.x_edges[0])
    hi = min(prof.x_edges[1], other.x_edges[1])
    x = np.linspace(lo, hi, 50001)
    dist = float(np.max(np.abs(prof(x)[0] - other(x)[0])))
    ok = dist <= 1e-6 * PARAMS.s
    report(4, "route agreement", ok, f"sup distance {dist:.2e} <= 1e-6")
    assert ok


def test_c05_poincare():
    suite = poincare_random_suite(seed=42, count=1000, rel_tol=1e-10)
    eq = poincare_equality_cases(tol=1e-12)
    ok = suite["n_violations"] == 0 and eq["passed"]
    report(5, "Poincare suite", ok,
           f"{suite['count']} cases, {suite['n_violations']} violations, worst relative "
           f"margin {suite['worst_relative_margin']:.1e}, equality |m| <= "
           f"{eq['max_abs_margin']:.1e}")
    assert ok


def test_c06_contraction_certificate():
    details, ok = [], True
    for fam in ACCEPTANCE_FAMILIES:
        res = family_run(fam)
        cert = dg.contraction_certificate(res.records, PARAMS.epsilon, tol_rel=1e-3)
        good = res.completed and res.records[-1].t >= 50.0 - 1e-9 and cert["passed"]
        ok &= good
        details.append(f"{fam}: rise {cert['max_uphill']:.1e}/E0 {cert['E0']:.3g}")
    report(6, "contraction certificate", ok, "; ".join(details))
    assert ok


def test_c07_energy_identity_refinement():
    prof = reference_profile()
    pert = named_perturbation("pulse-large", PARAMS)
    half = auto_grid(PARAMS, pert, prof, 4096).half_width
    residuals = []
    e0 = None
    for n in (2049, 4097, 8193, 16385):  # dx halves exactly
        g = Grid(half, n)
        res = run_simulation(PARAMS, g, pert.initial_data(g.x, prof),
                             RunSettings(T=50.0, dt=g.dx / 6.0), prof)
        assert res.completed
        e0 = res.records[0].E
        residuals.append(float(res.step_residual.max()))
    orders = [math.log2(residuals[i] / residuals[i + 1]) for i in range(len(residuals) - 1)]
    finest = residuals[-1] / e0
    ok = min(orders) >= 1.8 and finest <= 1e-5
    report(7, "energy identity", ok,
           f"orders {', '.join(f'{o:.2f}' for o in orders)}; finest {finest:.1e} * E0")
    assert ok


def test_c08_chain():
    ok, worst = True, math.inf
    for fam in ACCEPTANCE_FAMILIES:
        res = family_run(fam)
        scale = res.records[0].E * PARAMS.s ** 2 / PARAMS.epsilon
        chk = dg.chain_check(res.records, PARAMS.s, PARAMS.epsilon, 1e-8 * scale)
        ok &= chk["passed"]
        worst = min(worst, min(chk["worst_margins"].values()) / scale)
    report(8, "Poincare chain and envelope transfer", ok,
           f"worst relative margin {worst:.2e} (lam_low={LAMBDA_LOW:.4f}, "
           f"lam_high={LAMBDA_HIGH:g})")
    assert ok


def test_c09_asymptotics():
    ok, details = True, []
    for fam in ACCEPTANCE_FAMILIES:
        res = family_run(fam)
        linf = res.series("Linf")
        t = res.series("t")
        xdot = np.abs(res.series("Xdot"))
        r_inf = linf[-1] / linf[0]
        q = xdot[t >= 37.5].mean() / xdot[t <= 12.5].mean()
        ok &= r_inf < 0.1 and q < 0.1
        details.append(f"{fam}: Linf {r_inf:.1e}, |Xdot| {q:.1e}")
    report(9, "asymptotic decay", ok, "; ".join(details))
    assert ok


def _steady_deviation(n):
    prof = reference_profile()
    pert = named_perturbation("steady", PARAMS)
    g = auto_grid(PARAMS, pert, prof, n)
    pu = prof(g.x)[0]
    op = linear_operator(g, PARAMS.epsilon, PARAMS.delta)
    floor = steady_residual(pu, g, op, 1.0, -1.0) * PARAMS.epsilon / PARAMS.s ** 2
    stepper = IMEXStepper(op, u_bound=10.0, reference=pu)
    state = FieldState(0.0, pu.copy(), 1.0, -1.0)
    dt0 = 0.5 * g.dx
    steps = int(math.ceil(50.0 / dt0))
    dt = 50.0 / steps
    dev = 0.0
    for _ in range(steps):
        state = stepper.step(state, dt)
        dev = max(dev, float(np.max(np.abs(state.u - pu))))
    return dev, floor


def test_c10_steady_anchor():
    (d1, f1), (d2, f2) = _steady_deviation(2048), _steady_deviation(4096)
    shrink = f1 / f2
    ok = d1 <= 10 * f1 and d2 <= 10 * f2 and 3.6 <= shrink <= 4.4
    report(10, "steady-state anchor", ok,
           f"dev/floor {d1 / f1:.2f}, {d2 / f2:.2f}; floor shrink {shrink:.2f}x")
    assert ok


def test_c11_convention_finding():
    energy = family_run("shifted-profile")
    literal = family_run("shifted-profile", "paper_literal")
    ce = dg.contraction_certificate(energy.records, PARAMS.epsilon, 1e-3)
    cl = dg.contraction_certificate(literal.records, PARAMS.epsilon, 1e-3)
    detail = (f"energy_consistent: {'pass' if ce['passed'] else 'fail'} "
              f"(rise {ce['max_uphill']:.1e}); paper_literal: "
              f"{'pass' if cl['passed'] else 'fail'} (rise {cl['max_uphill'] / cl['E0']:.1f} E0, "
              f"status {literal.status}, X -> {literal.records[-1].X:.1f})")
    # the literal outcome is recorded, not asserted
    documented = len(literal.records) > 1 and math.isfinite(cl["max_uphill"])
    report(11, "convention finding", documented and ce["passed"], detail)
    assert documented and ce["passed"]
