import math

import numpy as np
import pytest

from weakhyp.problem import abs_kink, constant, example1_spec, example2_spec, t_power, wave_spec
from weakhyp.roots import (CASE1, CASE2, CASE3, RootField, characteristic_roots, classify,
                           estimate_holder)


def test_example1_constant_roots():
    r = characteristic_roots(example1_spec(constant(4.0)), 0.5, np.array([3.0]))
    assert np.allclose(r, [-6.0, 0.0, 6.0], atol=1e-9)


def test_example2_constant_roots():
    spec = example2_spec(constant(1.0), constant(4.0))
    r = characteristic_roots(spec, 0.5, np.array([2.0]))
    assert np.allclose(r, [-4.0, -2.0, 2.0, 4.0], atol=1e-9)


def test_roots_sorted_and_homogeneous():
    field_ = RootField(example2_spec(t_power(2), abs_kink(0.5, 0.5, offset=4)))
    t = np.linspace(0, 1, 33)
    r1 = field_.sample(t, np.array([1.5]))
    r2 = field_.sample(t, np.array([15.0]))
    assert np.all(np.diff(r1, axis=-1) >= -1e-12)
    assert np.allclose(r2, 10 * r1, rtol=1e-9, atol=1e-9)


def test_zero_frequency_roots():
    assert np.all(RootField(example1_spec(t_power(2))).sample(0.3, np.array([0.0])) == 0)


def test_holder_linear_roots():
    est = estimate_holder(RootField(example1_spec(t_power(2))), range(3), np.array([10.0]))
    assert est.exponent == pytest.approx(1.0, abs=0.05)
    assert not est.degenerate


def test_holder_square_root_kink():
    # roots +-|t - 1/2|^(1/2) |xi|
    est = estimate_holder(RootField(wave_spec(abs_kink(0.5, 1.0))), range(2), np.array([10.0]))
    assert est.exponent == pytest.approx(0.5, abs=0.05)


def test_holder_constant_roots_degenerate():
    est = estimate_holder(RootField(wave_spec(constant(1.0))), range(2), np.array([3.0]))
    assert est.degenerate


def test_classify_example1():
    spec = example1_spec(t_power(2))
    cls = classify(RootField(spec), spec)
    assert cls.case_id == CASE1
    assert cls.alpha == pytest.approx(1.0, abs=0.05)
    assert cls.touch_times and min(cls.touch_times) < 1e-6


def test_classify_example2():
    spec = example2_spec(t_power(2), abs_kink(0.5, 0.5, offset=4))
    cls = classify(RootField(spec), spec)
    assert cls.case_id == CASE2
    assert cls.r == 2
    assert cls.beta == pytest.approx(0.5, abs=0.05)
    assert cls.c_gap > 0


def test_classify_strictly_hyperbolic():
    spec = wave_spec(abs_kink(0.5, 0.5, scale=0.5, offset=1.0))
    cls = classify(RootField(spec), spec)
    assert cls.case_id == CASE3
    assert cls.r == 1
    assert cls.alpha == cls.beta


def test_classify_rejects_small_probe():
    spec = wave_spec(constant(1.0))
    with pytest.raises(ValueError):
        classify(RootField(spec), spec, probe_grid=(np.linspace(0, 1, 5), [np.array([0.5])]))
