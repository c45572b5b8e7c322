import math

import numpy as np
import pytest

from weakhyp.gevrey import synthesize
from weakhyp.problem import constant, example1_spec, example2_spec, t_power, wave_spec, abs_kink
from weakhyp.reduction import (InitialData, ZeroDatum, build_system, initial_vector, initial_vector_log,
                               reconstruct_uhat)
from weakhyp.roots import characteristic_roots


class Const:
    def __init__(self, v):
        self.v = v

    def __call__(self, xi):
        return self.v


def test_wave_matrices():
    sysm = build_system(wave_spec(t_power(1)))
    xi = np.array([3.0])
    lam = math.sqrt(10.0)
    A = sysm.A(0.4, xi)
    assert np.allclose(A, [[0, lam], [0.4 * 9 / lam, 0]])
    assert np.all(sysm.B(0.4, xi) == 0)


def test_lower_row_single_term():
    spec = example1_spec(t_power(2), lower={(0, (0,)): constant(1.0)})
    sysm = build_system(spec)
    xi = np.array([2.0])
    lam = math.sqrt(5.0)
    B = sysm.B(0.3, xi)
    assert np.allclose(B[-1], [lam ** -2, 0, 0])
    assert np.all(B[:-1] == 0)


def test_sparsity():
    sysm = build_system(example2_spec(t_power(2), abs_kink(0.5, 0.5, offset=4)))
    A = sysm.A(0.7, np.array([5.0]))
    mask = np.zeros((4, 4), dtype=bool)
    mask[np.arange(3), np.arange(1, 4)] = True
    mask[3] = True
    assert np.all(A[~mask] == 0)
    assert np.allclose(np.diag(A, 1), math.sqrt(26.0))


def test_doubling_lower_doubles_B():
    one = {(0, (0,)): constant(1.0)}
    two = {(0, (0,)): constant(2.0)}
    s1 = build_system(example1_spec(t_power(2), lower=one))
    s2 = build_system(example1_spec(t_power(2), lower=two))
    xi = np.array([4.0])
    assert np.array_equal(s1.A(0.5, xi), s2.A(0.5, xi))
    assert np.allclose(2 * s1.B(0.5, xi), s2.B(0.5, xi))


@pytest.mark.parametrize("spec", [example1_spec(t_power(2)),
                                  example2_spec(t_power(2), abs_kink(0.5, 0.5, offset=4))])
def test_eigenvalues_are_roots(spec):
    sysm = build_system(spec)
    for t in np.linspace(0, 1, 7):
        for x in (0.5, 3.0, 40.0):
            xi = np.array([x])
            ev = np.sort(np.linalg.eigvals(sysm.A(t, xi)).real)
            lam = math.sqrt(1 + x * x)
            assert np.allclose(ev, characteristic_roots(spec, t, xi), atol=1e-7 * lam)


def test_initial_vector():
    data = InitialData((Const(1.0), Const(1.0)))
    xi = np.array([math.sqrt(15.0)])  # <xi> = 4
    assert np.allclose(initial_vector(data, xi), [4, 1])
    assert np.all(initial_vector(InitialData.zero(3), xi) == 0)


def test_initial_vector_log_matches_direct():
    datum = synthesize(1.5, 1.0)
    data = InitialData.polarized(datum, lambda xi: 0.5, 3)
    xi = np.array([7.0])
    unit, ls = initial_vector_log(data, xi)
    assert np.allclose(unit * math.exp(ls), initial_vector(data, xi), rtol=1e-12)
    assert initial_vector_log(InitialData.zero(2), xi)[1] == -math.inf


def test_gevrey_data_carry_factor():
    datum = synthesize(2.0, 1.0)
    data = InitialData.first_only(datum, 2)
    xi = np.array([8.0])
    lam = math.sqrt(65.0)
    v = initial_vector(data, xi)
    assert v[0] == pytest.approx(lam * math.exp(-math.sqrt(lam)))
    assert v[1] == 0
    assert isinstance(data.ghat[1], ZeroDatum)


def test_reconstruct_uhat():
    xi = np.array([math.sqrt(99.0)])  # <xi> = 10
    assert reconstruct_uhat(np.array([100.0, 0, 0]), xi) == pytest.approx(1.0)
    assert reconstruct_uhat(np.array([2.5]), xi) == pytest.approx(2.5)
    assert np.all(reconstruct_uhat(np.zeros((4, 3)), xi) == 0)
