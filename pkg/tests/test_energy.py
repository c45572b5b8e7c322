import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest

from weakhyp import energy, solver
from weakhyp.errors import NoThreshold
from weakhyp.gevrey import synthesize
from weakhyp.mollify import MollifierSpec, regularize_case1
from weakhyp.problem import constant, example1_spec, t_power
from weakhyp.reduction import InitialData, build_system
from weakhyp.roots import CASE1, CASE2, CASE3, RootField


def _case(case_id, a, b=None, r=None):
    return SimpleNamespace(case_id=case_id, alpha=a, beta=a if b is None else b, r=r)


def test_index_examples():
    F = Fraction
    assert energy.select_gamma_s(_case(CASE1, F(1, 2)), 3, 2) == (F(2, 3), F(3, 2))
    assert energy.select_gamma_s(_case(CASE1, F(1, 3)), 3, 0)[1] == F(4, 3)
    assert energy.select_gamma_s(_case(CASE3, F(1, 2), F(1, 2), 1), 2, 0) == (1, 2)
    g, s = energy.select_gamma_s(_case(CASE2, F(1), F(1, 2), 2), 4, 0)
    assert s == 1 + min(F(1), F(1, 2) / (2 - F(1, 2)))
    assert g == min(F(1, 2), F(1, 4), F(4, 2))


def test_index_unbounded_and_floats():
    g, s = energy.select_gamma_s(_case(CASE3, 1.0, 1.0, 1), 2, 0)
    assert s == math.inf
    assert energy.default_s_test(s) == 2
    assert energy.default_s_test(Fraction(3)) == 2
    with pytest.raises(ValueError):
        energy.select_gamma_s(_case("Case9", 1.0), 3, 0)


def test_loss_exponent():
    assert energy.loss_exponent(CASE1, 0.5, 1.0, 3, 3) == pytest.approx(1.5)
    assert energy.loss_exponent(CASE2, 0.25, 1.0, 4, 2) == pytest.approx(0.25)


def test_params_violations():
    assert energy.EnergyParams(CASE1, 0.5, 1.5, 2.0, 1.0).violations(1.0) == []
    assert energy.EnergyParams(CASE1, 0.5, 1.5, 0.5, 1.0).violations(1.0)
    assert energy.EnergyParams(CASE1, 0.5, 1.5, 2.0, 1.0, delta1=1.0).violations(0.5)
    p = energy.EnergyParams(CASE1, 0.5, 1.5, 2.0, 1.0)
    assert np.allclose(p.rho([0, 1]), [2.0, 1.0])
    assert np.allclose(p.rho_prime([0, 1]), [-1.0, -1.0])


def test_energy_derivative_examples():
    W = np.array([1 + 2j, -0.5j, 3.0])
    assert energy.energy_derivative(np.zeros(3), W) == 0
    assert abs(energy.energy_derivative(W, 1j * W)) <= 1e-14 * np.vdot(W, W).real
    assert energy.energy_derivative(W, -W) == pytest.approx(-2 * np.vdot(W, W).real)


def test_threshold_and_excursion():
    lams = [1, 2, 4, 8]
    assert energy.threshold(lams, [1.0, -1.0, 2.0, -3.0]) == 8
    assert energy.threshold(lams, [1.0, -1.0, -2.0, -3.0]) == 2
    with pytest.raises(NoThreshold):
        energy.threshold(lams, [-1.0, -1.0, -1.0, 0.5])
    assert energy.monotone_excursion(np.log([3.0, 2.0, 1.0])) == 0.0
    assert energy.monotone_excursion(np.log([1.0, 0.5, 0.75])) == pytest.approx(0.75 ** 2 - 0.25)


def test_rate_fit_kinds():
    assert energy.RateFit("t1", 0.55, 0.5).passed
    assert not energy.RateFit("t1", 0.7, 0.5).passed
    assert energy.RateFit("t1", -3.0, 0.5, kind="bound").passed
    assert not energy.RateFit("t1", 0.7, 0.5, kind="bound").passed
    assert energy.RateFit("t4", None, 0.5).passed
    assert energy.fit_slope([1, 10, 100], [2, 20, 200]) == pytest.approx(1.0)
    assert energy.expected_slopes(CASE1, 0.5, 1.0, 3, 0) == (0.5, 0.5, 0.5, -1.0)


def test_final_bound_without_modes_is_vacuous():
    fb = energy.final_bound_check([])
    assert fb.passed and fb.n_modes == 0


FLAG = example1_spec(t_power(2), T=0.002, lower={(0, (0,)): constant(1.0)})


def _flagship(lams, kappa):
    sysm = build_system(FLAG)
    mr = regularize_case1(RootField(FLAG), MollifierSpec(), lambda lam: lam ** -0.5, 1.0)
    params = energy.EnergyParams(CASE1, 0.5, 1.5, 1.0 + 1.5 * kappa * FLAG.T, kappa)
    data = InitialData.first_only(synthesize(1.5, 1.0), 3)
    rep = solver.sweep(sysm, data, params, mr, lams, tol=1e-10, workers=1)
    return sysm, mr, params, rep


def test_constant_roots_terms_vanish():
    spec = example1_spec(constant(4.0))
    sysm = build_system(spec)
    mr = regularize_case1(RootField(spec), MollifierSpec(), 0.01, 1.0)
    est = energy.term_estimates(sysm, mr, np.linspace(0, 0.9, 9), np.array([50.0]))
    assert np.all(np.abs(est.t1) <= 1e-8) and np.all(np.abs(est.t2) <= 1e-8)
    assert np.all(est.t4 == 0)
    assert np.all(np.isneginf(est.source_log))


def test_term_estimates_pairwise_bound():
    sysm, mr, params, _ = _flagship([], 1.0)
    xi = np.array([2.0 ** 22])
    t = np.linspace(0, mr.horizon(math.sqrt(1 + xi[0] ** 2)), 64)
    est = energy.term_estimates(sysm, mr, t, xi)
    assert np.all(est.t1 <= est.t1_pairwise * (1 + 1e-10))
    assert np.all(np.isfinite(est.terms)) and np.all(est.terms >= 0)


def test_rate_slopes_match_case1_formula():
    spec = example1_spec(t_power(2))
    sysm = build_system(spec)
    mr = regularize_case1(RootField(spec), MollifierSpec(), lambda lam: lam ** -0.5, 1.0)
    fits = energy.rate_fits(sysm, mr, 2.0 ** np.arange(4, 11), n_times=128,
                            expected=energy.expected_slopes(CASE1, 0.5, 1.0, 3, 0))
    assert all(f.passed for f in fits), fits


def test_no_damping_has_no_threshold():
    sysm, mr, params, rep = _flagship(2.0 ** np.linspace(22, 26, 5), 0.0)
    with pytest.raises(NoThreshold):
        energy.certify_monotonicity(sysm, mr, params, rep, loss=1.5)


def test_threshold_nonincreasing_in_kappa(example1_run):
    ladder = example1_run["monotonicity"]["ladder"]
    thr = [e["threshold"] if e["threshold"] is not None else math.inf
           for e in sorted(ladder, key=lambda e: e["kappa"])]
    assert thr[0] == math.inf
    assert all(a >= b for a, b in zip(thr, thr[1:]))


def test_flagship_small_sweep_monotone():
    sysm, mr, params, rep = _flagship(2.0 ** np.linspace(24, 27, 4), 4.0)
    mono = energy.certify_monotonicity(sysm, mr, params, rep, loss=1.5)
    assert mono.xi0 is not None and mono.monotone
    assert mono.max_excursion <= 1e-10
    assert energy.final_bound_check(mono.verdicts).passed


def test_zero_data_modes_pass_trivially():
    sysm, mr, params, _ = _flagship([], 1.0)
    rep = solver.sweep(sysm, InitialData.zero(3), params, mr, [2.0 ** 24, 2.0 ** 25], workers=1)
    summaries = [energy.summarize_mode(m.trajectory, sysm, mr, params) for m in rep.ok]
    v = energy.mode_verdict(summaries[0], params, 1.5, xi0=1.0)
    assert v.log_c == -math.inf and v.monotone
