import math

import numpy as np
import pytest

from weakhyp.problem import (ProblemSpec, abs_kink, bracket, constant, example1_spec, example2_spec,
                             lower_symbol, monomial, multi_indices, principal_coefficients,
                             principal_symbol, radial_power, smooth_step, t_power, validate_spec,
                             wave_spec)


def test_registry_atoms():
    assert t_power(2)(0.5) == pytest.approx(0.25)
    assert abs_kink(0.5, 0.5, offset=4)(0.75) == pytest.approx(4.5)
    assert constant(3)(np.linspace(0, 1, 5)) == pytest.approx(np.full(5, 3.0))
    s = smooth_step(0.5, 0.2)
    assert s(0.0) == pytest.approx(0.0) and s(1.0) == pytest.approx(1.0)


def test_coefficient_algebra():
    a, b = t_power(2), abs_kink(0.5, 0.5, offset=4)
    t = np.linspace(0, 1, 11)
    assert np.allclose((a + b)(t), a(t) + b(t))
    assert np.allclose((a * b)(t), a(t) * b(t))
    assert np.allclose((-(a * b))(t), -a(t) * b(t))


def test_bracket_and_monomial():
    assert bracket(np.array([3.0])) == pytest.approx(math.sqrt(10))
    assert monomial(np.array([2.0, 3.0]), (1, 2)) == pytest.approx(18.0)
    assert sorted(multi_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert radial_power(2, 2) == {(4, 0): 1, (2, 2): 2, (0, 4): 1}


def test_example1_symbol_and_roots():
    spec = example1_spec(constant(4.0))
    xi = np.array([3.0])
    for tau in (-6.0, 0.0, 6.0):
        assert abs(principal_symbol(spec, 0.3, xi, tau)) < 1e-9
    assert principal_symbol(spec, 0.3, xi, 1.0) == pytest.approx(1 - 36)


def test_example2_symbol_factorization():
    a, b = t_power(2), abs_kink(0.5, 0.5, offset=4)
    spec = example2_spec(a, b)
    xi = np.array([1.7])
    t = 0.3
    for tau in np.linspace(-3, 3, 7):
        want = (tau ** 2 - a(t) * 1.7 ** 2) * (tau ** 2 - b(t) * 1.7 ** 2)
        assert principal_symbol(spec, t, xi, tau) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_principal_homogeneity():
    spec = example2_spec(t_power(2), abs_kink(0.5, 0.5, offset=4), n=2)
    xi = np.array([0.7, -1.1])
    t = 0.4
    for c in (2.0, 10.0):
        for tau in (0.3, -1.2):
            assert principal_symbol(spec, t, c * xi, c * tau) == pytest.approx(
                c ** 4 * principal_symbol(spec, t, xi, tau), rel=1e-10)


def test_lower_symbol():
    spec = example1_spec(t_power(2), lower={(0, (0,)): constant(1.0)})
    assert lower_symbol(spec, 0.2, np.array([5.0]), 7.0) == pytest.approx(1.0)


def test_validate_accepts_examples():
    assert validate_spec(example1_spec(t_power(2))) == []
    assert validate_spec(wave_spec(constant(1.0), n=3)) == []


def test_validate_rejects():
    assert validate_spec(example1_spec(t_power(2), l=3))
    bad = ProblemSpec(m=2, l=0, n=1, T=1.0, principal={(0, (1,)): constant(1.0)})
    assert any("homogeneity" in v for v in validate_spec(bad))
    assert validate_spec(ProblemSpec(m=2, l=0, n=1, T=0.0))
    lower = ProblemSpec(m=2, l=0, n=1, T=1.0, principal={(0, (2,)): constant(1.0)},
                        lower={(1, (0,)): constant(1.0)})
    assert any("lower" in v for v in validate_spec(lower))


def test_principal_coefficient_rows():
    spec = example1_spec(t_power(2))
    c = principal_coefficients(spec, np.array([0.5]), np.array([2.0]))
    assert c.shape == (1, 3)
    assert np.allclose(c[0], [0.0, 0.25 * 4, 0.0])
