import math

import numpy as np
import pytest

from weakhyp import gevrey
from weakhyp.errors import FitDegenerate
from weakhyp.selftest import round_trip_grid


def _log_samples(datum, lams):
    return np.array([datum.log_parts(np.array([math.sqrt(L * L - 1)]))[0] for L in lams])


def test_synthesize_value():
    assert gevrey.synthesize(1, 1)(np.array([0.0])) == pytest.approx(math.exp(-1))
    vals = [abs(gevrey.synthesize(2, 0.5)(np.array([x]))) for x in (1, 10, 100, 1000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_synthesize_phase_and_checks():
    d = gevrey.synthesize(1.5, 1.0, profile=lambda xi: math.pi / 2)
    v = d(np.array([3.0]))
    assert v.real == pytest.approx(0.0, abs=1e-15) and v.imag > 0
    with pytest.raises(ValueError):
        gevrey.synthesize(0.5, 1.0)
    with pytest.raises(ValueError):
        gevrey.synthesize(2.0, 0.0)


@pytest.mark.parametrize("s", [1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("delta", [0.1, 1.0])
def test_round_trip(s, delta):
    lams = round_trip_grid(s, delta)
    fit = gevrey.fit_decay_log(lams, _log_samples(gevrey.synthesize(s, delta), lams))
    assert fit.s == pytest.approx(s, rel=0.02)
    assert fit.delta == pytest.approx(delta, rel=0.02)
    assert not fit.non_exponential


def test_fit_decay_pairs():
    lams = np.geomspace(4, 4096, 32)
    samples = [(L, math.exp(-0.5 * math.sqrt(L))) for L in lams]
    fit = gevrey.fit_decay(samples)
    assert fit.s == pytest.approx(2.0, rel=0.02) and fit.delta == pytest.approx(0.5, rel=0.02)
    assert fit.C == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("p", [0, 5, 10])
def test_polynomial_factor_keeps_order(p):
    lams = 2.0 ** np.linspace(20, 60, 64)
    y = p * np.log(lams) - lams ** (1 / 2.0)
    assert gevrey.fit_decay_log(lams, y).s == pytest.approx(2.0, rel=0.02)


def test_polynomial_decay_flagged():
    lams = np.geomspace(4, 4096, 32)
    fit = gevrey.fit_decay([(L, L ** -3.0) for L in lams])
    assert fit.non_exponential


def test_growth_model():
    lams = np.geomspace(4, 4096, 32)
    y = 0.3 + 0.7 * lams ** 0.5
    fit = gevrey.fit_decay_log(lams, y, gevrey.GROWTH)
    assert fit.s == pytest.approx(2.0, rel=0.02) and fit.delta == pytest.approx(0.7, rel=0.02)
    assert gevrey.envelope_log_C(lams, y, 0.7, 2.0) == pytest.approx(0.3)


def test_preconditions():
    with pytest.raises(ValueError):
        gevrey.fit_decay([(10.0, 0.1)] * 12)
    with pytest.raises(ValueError):
        gevrey.fit_decay([(L, 0.1) for L in np.geomspace(4, 8, 12)])
    with pytest.raises(ValueError):
        gevrey.fit_decay([(L, 0.1) for L in np.geomspace(4, 4096, 5)])
    with pytest.raises(ValueError):
        gevrey.fit_decay([(L, -1.0) for L in np.geomspace(4, 4096, 12)])
    with pytest.raises(ValueError):
        gevrey.fit_decay_log(np.geomspace(4, 4096, 12), np.zeros(12), model="flat")


def test_degenerate_inputs():
    with pytest.raises(FitDegenerate):
        gevrey.fit_decay([(L, 0.0) for L in np.geomspace(4, 4096, 12)])
    with pytest.raises(FitDegenerate):
        gevrey.fit_decay([(L, 0.25) for L in np.geomspace(4, 4096, 12)])


def test_zero_magnitudes_dropped_with_note():
    lams = np.geomspace(4, 4096, 16)
    mags = np.exp(-np.sqrt(lams))
    mags[3] = 0.0
    fit = gevrey.fit_decay(np.stack([lams, mags], axis=1))
    assert fit.n_samples == 15
    assert any("dropped" in n for n in fit.notes)


def test_verdicts():
    lams = np.geomspace(16, 2 ** 14, 32)
    y = -lams ** (1 / 1.5)
    v = gevrey.wellposedness_verdict(None, lams, y, s_test=1.5, s_sup=2.0)
    assert v.verdict == gevrey.GEVREY_PRESERVED and v.passed
    assert "roumieu" in v.quantifier
    lost = gevrey.wellposedness_verdict(None, lams, -lams ** 0.25, s_test=1.5, s_sup=2.0)
    assert lost.verdict == gevrey.GEVREY_LOST and lost.passed is False
    zero = gevrey.wellposedness_verdict(None, lams, np.full(32, -math.inf), 1.5, 2.0)
    assert zero.verdict == gevrey.VACUOUS and zero.passed and zero.flags


def test_out_of_range_verdict_uncertified():
    lams = np.geomspace(16, 2 ** 14, 32)
    v = gevrey.wellposedness_verdict(None, lams, -lams ** 0.4, s_test=2.5, s_sup=2.0)
    assert v.passed is None and v.flags


def test_growth_verdict_at_endpoint():
    lams = np.geomspace(16, 2 ** 14, 32)
    v = gevrey.wellposedness_verdict(None, lams, 2.0 + lams ** 0.5, s_test=2.0, s_sup=2.0,
                                     model=gevrey.GROWTH)
    assert v.verdict == gevrey.GROWTH_BOUNDED and v.passed
    assert "beurling" in v.quantifier
    assert v.envelope_log_C == pytest.approx(2.0, abs=1e-6)
