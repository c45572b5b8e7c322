"""Acceptance checks, one PASS/FAIL line per criterion.

Tolerances and runtime limits are pinned below.  The lines are collected in
``conftest.ACCEPTANCE_LINES`` and printed in the pytest terminal summary;
``python tests/test_acceptance.py`` prints them directly.
"""
import math
import os
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACCEPTANCE_LINES, scenario_results  # noqa: E402
from weakhyp import energy, gevrey, report, runner, scenarios, selftest, solver  # noqa: E402
from weakhyp.mollify import MollifierSpec, regularize  # noqa: E402
from weakhyp.problem import constant, example1_spec, t_power  # noqa: E402
from weakhyp.reduction import build_system  # noqa: E402
from weakhyp.roots import CASE1, CASE2, RootField, classify  # noqa: E402

# pinned tolerances
SYM_DET, SYM_INV, SYM_ENTRY = 1e-10, 1e-8, 1e-6
EIG_GATE = 1e-7
SEPARATION, SPREAD = 1e-12, 0.20
SLOPE_TOL = 0.15
EXCURSION = 1e-10
ORDER_TOL, RESIDUAL = 0.05, 0.2
RK_ORDER, RK_ORDER_TOL, LIN_FACTOR = 4.0, 0.3, 5.0
# runtime limits in seconds
LIMITS = {1: 10, 2: 30, 3: 60, 4: 120, 5: 180, 7: 300, 8: 1, 9: 10, 10: 180, 11: 120}


def record(n, ok, detail, seconds=None):
    tag = "PASS" if ok else "FAIL"
    took = f" [{seconds:.1f}s <= {LIMITS[n]}s]" if seconds is not None else ""
    line = f"{tag} criterion {n}: {detail}{took}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def within(n, seconds):
    return seconds <= LIMITS[n]


def test_symmetrizer_closed_forms():
    res = selftest.symmetrizer_suite(n_per_m=1000, orders=range(2, 7))
    m = res.metrics
    ok = (m["det"] <= SYM_DET and m["inverse"] <= SYM_INV and m["dH_offdiag"] <= SYM_ENTRY
          and m["B"] <= SYM_ENTRY and m["A_offdiag"] <= SYM_ENTRY and within(1, res.seconds))
    assert record(1, ok, f"det {m['det']:.2e} <= {SYM_DET:g}, inverse/cond {m['inverse']:.2e} <= {SYM_INV:g}, "
                         f"entries (A {m['A_offdiag']:.2e}, B {m['B']:.2e}, dH {m['dH_offdiag']:.2e}) "
                         f"<= {SYM_ENTRY:g} over {m['instances']} instances", res.seconds)


def test_eigenvalue_keystone():
    res = selftest.eigenvalue_suite(n_grid=50, n_random=20, gate=EIG_GATE)
    err = res.metrics["max_error_over_bracket"]
    ok = err <= EIG_GATE and within(2, res.seconds)
    assert record(2, ok, f"max |eig - root| / <xi> = {err:.2e} <= {EIG_GATE:g} on 50x50 grids, "
                         f"{res.metrics['specs']} specs", res.seconds)


def test_mollification_properties():
    res = selftest.mollifier_suite(eps_powers=(4, 5, 6, 7, 8), spread=SPREAD)
    m = res.metrics
    ok = (m["separation_violation"] <= SEPARATION and m["spread_i"] <= SPREAD and m["spread_ii"] <= SPREAD
          and m["case2_all"] and m["case2_probes_above"] > 0 and within(3, res.seconds))
    assert record(3, ok, f"separation violation {m['separation_violation']:.1e} <= {SEPARATION:g}; "
                         f"constant spread (i) {m['spread_i']:.2e}, (ii) {m['spread_ii']:.2e} <= {SPREAD:g}; "
                         f"Case 2 gaps pass on {m['case2_probes_above']} probes above "
                         f"<xi> = {m['case2_threshold']:.3g}", res.seconds)


def test_rate_fits():
    t0 = time.perf_counter()
    spec = example1_spec(t_power(2.0), T=1.0, lower={(0, (0,)): constant(1.0)})
    field_ = RootField(spec)
    cls = classify(field_, spec)
    gamma, _ = energy.select_gamma_s(cls, spec.m, spec.l)
    mr = regularize(field_, MollifierSpec(), cls, float(gamma))
    expected = energy.expected_slopes(CASE1, gamma, cls.alpha, spec.m, spec.l)
    fits = energy.rate_fits(build_system(spec), mr, 2.0 ** np.arange(4, 11), expected=expected)
    took = time.perf_counter() - t0
    ok = cls.case_id == CASE1 and all(f.passed and f.tolerance == SLOPE_TOL for f in fits) and within(4, took)
    detail = ", ".join(f"{f.term} {f.slope:.3f} vs {f.expected:.3f}" for f in fits)
    assert record(4, ok, f"slopes within {SLOPE_TOL}: {detail}", took)


def test_energy_monotonicity():
    res, took = scenario_results("example1")
    idx, mono = res["indices"], res["monotonicity"]
    alpha = res["classification"]["alpha"]
    s_want = 1 + 0.5 * min(alpha, math.inf)  # l = 0: (m - l)/l is infinite
    kappa0 = [e for e in mono["ladder"] if e["kappa"] == 0]
    ok = (res["sweep"]["modes"] == 200 and not res["sweep"]["failures"]
          and abs(idx["s_test"] - s_want) <= 1e-9 and mono["kappa"] == 1.0
          and mono["threshold"] is not None and mono["checked"] > 0 and mono["monotone"]
          and mono["max_excursion"] <= EXCURSION
          and len(kappa0) == 1 and kappa0[0]["threshold"] is None and within(5, took))
    assert record(5, ok, f"kappa=1 threshold <xi> = 2^{mono['log2_threshold']:.2f}, {mono['checked']} modes "
                         f"checked, max excursion {mono['max_excursion']:.1e} <= {EXCURSION:g}; "
                         f"kappa=0 threshold: {kappa0[0]['threshold'] if kappa0 else 'missing'}", took)


def test_final_bound():
    res, _ = scenario_results("example1")
    fb, idx = res["final_bound"], res["indices"]
    alpha = res["classification"]["alpha"]
    loss = idx["gamma"] * alpha * 3 * 2 / 2
    ok = fb["passed"] and math.isfinite(fb["log_c"]) and abs(fb["loss_exponent"] - loss) <= 1e-12
    assert record(6, ok, f"single c = {fb['c']:.3e} over {fb['modes']} modes, loss exponent "
                         f"{fb['loss_exponent']:.4f}, log c slope {fb['slope']:.3f} <= 0.05")


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_gevrey_preservation(name):
    res, took = scenario_results(name)
    g, idx, cls = res["gevrey"], res["indices"], res["classification"]
    if name == "example2":
        beta = cls["beta"]
        s_sup = 1 + min(cls["alpha"], beta / (2 - beta))
        case_ok = cls["case"] == CASE2 and cls["r"] == 2 and abs(idx["s_sup"] - s_sup) <= 1e-12
    else:
        case_ok = cls["case"] == CASE1
    fit = g["fit"]
    ok = (case_ok and idx["s_test_inside"] and g["verdict"] == gevrey.GEVREY_PRESERVED
          and fit["s"] <= idx["s_test"] * (1 + ORDER_TOL) and fit["residual"] <= RESIDUAL and within(7, took))
    assert record(7, ok, f"{name}: s_hat {fit['s']:.4f} <= {1 + ORDER_TOL} * {idx['s_test']:.4f}, "
                         f"residual {fit['residual']:.3g} <= {RESIDUAL}, s_sup {idx['s_sup']:.4f}", took)


def test_index_formulas():
    res = selftest.index_suite()
    ok = res.passed and within(8, res.seconds)
    assert record(8, ok, f"{res.metrics['rows']} exact rational rows, mismatches {res.metrics['mismatches']}",
                  res.seconds)


@pytest.mark.parametrize("backend", sorted(solver.BACKENDS))
def test_integrator_order(backend):
    tol = 1e-10
    res = selftest.integrator_suite(backend=backend, tol=tol)
    m = res.metrics
    ok = (abs(m["order_1"] - RK_ORDER) <= RK_ORDER_TOL and abs(m["order_2"] - RK_ORDER) <= RK_ORDER_TOL
          and m["linearity_error"] <= LIN_FACTOR * tol and m["zero_data"] <= LIN_FACTOR * tol
          and within(9, res.seconds))
    assert record(9, ok, f"{backend}: orders {m['order_1']:.3f}, {m['order_2']:.3f} in 4 +- {RK_ORDER_TOL}; "
                         f"linearity {m['linearity_error']:.1e}, zero data {m['zero_data']:.1e} "
                         f"<= {LIN_FACTOR} tol", res.seconds)


def test_growth_check():
    res, took = scenario_results("example1-growth")
    g, idx, mono = res["gevrey"], res["indices"], res["monotonicity"]
    fit = g["fit"]
    ok = (g["verdict"] == gevrey.GROWTH_BOUNDED and g["passed"] and abs(idx["s_test"] - idx["s_sup"]) <= 1e-12
          and abs(fit["s"] - idx["s_sup"]) <= 1e-9 and fit["residual"] <= RESIDUAL
          and mono["smallest_passing_kappa"] is not None and within(10, took))
    assert record(10, ok, f"growth fit at s_sup = {idx['s_sup']:.4f}: residual {fit['residual']:.3g} <= "
                          f"{RESIDUAL}, log C = {g['envelope_log_C']:.3f}, kappa from ladder = "
                          f"{mono['smallest_passing_kappa']}", took)


def test_determinism():
    cfg = scenarios.scenario_config("example1")
    t0 = time.perf_counter()
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k, workers in enumerate((1, 4, 4)):
            out = os.path.join(tmp, str(k))
            report.emit_report(runner.execute(cfg, workers=workers), out)
            blobs.append({f: open(os.path.join(out, f), "rb").read() for f in sorted(os.listdir(out))})
    took = time.perf_counter() - t0
    ok = blobs[0] == blobs[1] == blobs[2] and len(blobs[0]) >= 4 and within(11, took)
    assert record(11, ok, f"{len(blobs[0])} report files byte-identical over 3 runs, workers 1, 4, 4", took)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
