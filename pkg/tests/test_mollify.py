import math

import numpy as np
import pytest

from weakhyp.errors import HorizonTooShort
from weakhyp.mollify import (MollifierSpec, bump, bump_derivative, gap_threshold, regularize_case1,
                             regularize_case2, verify_regularization)
from weakhyp.problem import constant, example1_spec, t_power, wave_spec
from weakhyp.roots import RootField

PHI = MollifierSpec(bump, bump_derivative)


def test_mollifier_normalized():
    assert PHI.check() == []
    assert PHI.mass == pytest.approx(1.0, abs=1e-10)


def test_convolution_reproduces_linear_functions():
    f = lambda s: np.stack([2.0 * s + 1.0, -s], axis=-1)  # noqa: E731
    t = np.linspace(0.1, 0.9, 9)
    out = PHI.convolve(f, t, 0.05)
    assert np.allclose(out[:, 0], 2 * t + 1, atol=1e-12)
    assert np.allclose(PHI.convolve_derivative(f, t, 0.05)[:, 0], 2.0, atol=1e-9)


def test_constant_roots_only_shift():
    # roots -2|xi|, 0, 2|xi| for tau^3 - 4|xi|^2 tau
    mr = regularize_case1(RootField(example1_spec(constant(4.0))), PHI, 0.01, 1.0)
    xi = np.array([10.0])
    lam = math.sqrt(101.0)
    v = mr.values(np.linspace(0, 0.9, 7), xi)
    want = np.array([-20.0, 0.0, 20.0]) + np.arange(1, 4) * 0.01 * lam
    assert np.allclose(v, want[None, :], atol=1e-9)
    assert np.allclose(mr.derivatives(0.5, xi), 0.0, atol=1e-8)


def test_case1_separation_exact():
    mr = regularize_case1(RootField(example1_spec(t_power(2))), PHI, 2.0 ** -6, 1.0)
    xi = np.array([100.0])
    lam = math.sqrt(1.0 + 1e4)
    v = mr.values(np.linspace(0, mr.horizon(lam), 257), xi)
    gaps = np.diff(v, axis=-1)
    assert np.min(gaps - 2.0 ** -6 * lam) >= -1e-12 * lam


def test_derivative_two_ways():
    mr = regularize_case1(RootField(example1_spec(t_power(2))), PHI, 2.0 ** -5, 1.0)
    xi = np.array([20.0])
    t = np.linspace(0.05, 0.9, 11)
    assert np.allclose(mr.derivatives(t, xi), mr.derivatives_fd(t, xi), rtol=1e-5, atol=1e-6)


def test_verify_reports_properties():
    mr = regularize_case1(RootField(example1_spec(t_power(2))), PHI, 2.0 ** -6, 1.0)
    rep = verify_regularization(mr, (None, [np.array([10.0]), np.array([100.0])]))
    assert rep.passed
    assert math.isfinite(rep.get("(i) derivative bound, coinciding block").constant)
    with pytest.raises(KeyError):
        rep.get("no such property")


def test_scale_preconditions():
    f = RootField(wave_spec(constant(1.0), T=0.01))
    with pytest.raises(ValueError):
        regularize_case1(f, PHI, 1.5, 1.0)
    with pytest.raises(ValueError):
        regularize_case1(f, PHI, 0.001, 0.0)
    with pytest.raises(HorizonTooShort):
        regularize_case1(f, PHI, 0.05, 1.0)
    with pytest.raises(ValueError):
        regularize_case2(f, PHI, 0.001, 0.001, 1.0, 1.0, r=2)


def test_gap_threshold_behaviour():
    lo = gap_threshold(1.0, 1.0, 1.0, 0.5, 0.5, 2)
    hi = gap_threshold(0.1, 1.0, 1.0, 0.5, 0.5, 2)
    assert math.sqrt(2.0) <= lo <= hi < math.inf
    lam = hi * 1.01
    assert lam ** -0.5 <= (0.1 / (4 * math.sqrt(2) * 2))
