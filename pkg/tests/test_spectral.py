import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distill.errors import ConvergenceError, IllPosedResonanceError, NegativeEigenvalueError, NotHermitianError
from distill.fockspace import FockBasis, Operator, PerMode, TotalExcitation, angular_momentum_ops, total_number
from distill.scenarios import CouplingScenario, omega_omega_dag
from distill.spectral import (
    _sin_sqrt,
    choose_gamma_tau,
    cos_sqrt,
    eigh_matrix,
    hermitian_eig,
    leakage_after_N,
    resonant_set,
)


def _op(matrix):
    m = np.asarray(matrix, dtype=complex)
    return Operator(FockBasis(1, PerMode(m.shape[0] - 1)), m)


def _random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return x + x.conj().T


def test_diagonal_input():
    dec = hermitian_eig(_op(np.diag([3.0, 1.0, 2.0])))
    assert np.allclose(dec.eigenvalues, [1, 2, 3])


def test_pauli_x():
    dec = hermitian_eig(_op([[0, 1], [1, 0]]))
    assert np.allclose(dec.eigenvalues, [-1, 1])
    v = dec.eigenvectors
    assert abs(abs(np.vdot(v[:, 0], [1, -1])) / math.sqrt(2) - 1) < 1e-12
    assert abs(abs(np.vdot(v[:, 1], [1, 1])) / math.sqrt(2) - 1) < 1e-12


def test_second_red_2d_four_quanta_spectrum():
    sc = CouplingScenario.second_red_2d(4)
    block = omega_omega_dag(sc).restrict(sc.basis.sector(4))
    dec = hermitian_eig(block)
    # squares of 2 sqrt 5, 4 sqrt 2, 6 for |m| = 4, 2, 0
    assert np.allclose(dec.eigenvalues, [20, 20, 32, 32, 36], atol=1e-9)


@given(st.integers(1, 24), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_jacobi_invariants(n, seed):
    m = _random_hermitian(n, seed)
    w, u = eigh_matrix(m)
    scale = np.abs(m).max()
    assert np.all(np.diff(w) >= 0)
    assert np.abs(m @ u - u * w).max() <= 1e-10 * scale
    assert np.abs(u.conj().T @ u - np.eye(n)).max() <= 1e-10
    assert np.allclose(w, np.linalg.eigvalsh(m), atol=1e-10 * scale)


def test_reconstruction_on_block_structured_operator():
    b = FockBasis(3, TotalExcitation(5))
    l2 = angular_momentum_ops(b)["L2"]
    dec = hermitian_eig(l2)
    assert np.abs(dec.reconstruct() - l2.matrix).max() <= 1e-10 * np.abs(l2.matrix).max()


def test_degenerate_spectrum():
    w, u = eigh_matrix(np.eye(5) * 2.5)
    assert np.allclose(w, 2.5)
    assert np.allclose(u.conj().T @ u, np.eye(5))


def test_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        hermitian_eig(_op([[0, 1], [0, 0]]))


def test_sweep_cap():
    with pytest.raises(ConvergenceError):
        hermitian_eig(_op(_random_hermitian(6, 1)), max_sweeps=1)


def test_cos_sqrt_of_zero_is_identity():
    v = cos_sqrt(_op(np.zeros((4, 4))), 1.234)
    assert np.allclose(v.matrix, np.eye(4))


def test_cos_sqrt_number_operator():
    b = FockBasis(1, PerMode(10))
    v = cos_sqrt(total_number(b), 2 * math.pi)
    d = np.diag(v.matrix).real
    assert d[4] == pytest.approx(1.0, abs=1e-12)
    assert d[9] == pytest.approx(1.0, abs=1e-12)
    # cos(2 pi sqrt 2) by scalar evaluation
    assert d[2] == pytest.approx(-0.8582161856688175, abs=1e-12)
    assert v.hermitian
    assert np.all(np.abs(np.linalg.eigvalsh(v.matrix)) <= 1 + 1e-12)


@pytest.mark.parametrize("kind", ["second_red_2d", "second_red_3d"])
def test_cos_sin_pythagoras(kind):
    sc = CouplingScenario(kind, 4)
    m = omega_omega_dag(sc)
    c, s = cos_sqrt(m, 0.77), _sin_sqrt(m, 0.77)
    assert np.abs((c @ c + s @ s).matrix - np.eye(m.dim)).max() < 1e-10


def test_clamps_tiny_negative_eigenvalues():
    v = cos_sqrt(_op(np.diag([-5e-11, 1.0])), math.pi)
    assert np.allclose(np.diag(v.matrix), [1, -1])


def test_rejects_negative_operator():
    with pytest.raises(NegativeEigenvalueError):
        cos_sqrt(_op(np.diag([-1e-6, 1.0])), 1.0)


def test_resonant_set_2d_cat():
    rs = resonant_set([20, 32, 36], math.pi / math.sqrt(5), 1e-9)
    assert [(m.eigenvalue, m.l, m.parity) for m in rs.members] == [(20.0, 2, 1)]
    assert rs.leakage_bound < 1


def test_resonant_set_perfect_squares():
    rs = resonant_set([0, 1, 4, 9], 2 * math.pi)
    assert rs.indices == [0, 1, 2, 3]
    assert [m.l for m in rs.members] == [0, 2, 4, 6]
    assert rs.leakage_bound == 0.0


def test_resonant_set_3d_second_shell():
    rs = resonant_set([20, 14], math.pi / math.sqrt(5))
    assert rs.member_eigenvalues() == [20.0]
    assert rs.leakage_bound == pytest.approx(0.5179913221130003, abs=1e-12)


def test_resonant_set_ill_posed():
    gt = math.pi / math.sqrt(20)
    near = (math.pi + 1e-7) ** 2 / gt**2
    with pytest.raises(IllPosedResonanceError):
        resonant_set([20, near], gt, 1e-9)


@pytest.mark.parametrize("tol", [0.0, 0.1, 1.0])
def test_resonant_set_tolerance_range(tol):
    with pytest.raises(ValueError):
        resonant_set([1.0], 1.0, tol)


@pytest.mark.parametrize(
    "target, l, expected",
    [(20, 2, math.pi / math.sqrt(5)), (1, 2, 2 * math.pi), (6, 1, math.pi / math.sqrt(6))],
)
def test_choose_gamma_tau(target, l, expected):
    assert choose_gamma_tau(target, l) == pytest.approx(expected, rel=1e-15)


def test_choose_gamma_tau_rejects_nonpositive():
    with pytest.raises(ValueError):
        choose_gamma_tau(0.0, 1)


def test_leakage_after_N():
    rs0 = resonant_set([0, 1, 4], 2 * math.pi)
    assert leakage_after_N(rs0, 7) == 0.0
    rs = resonant_set([20, 32, 36], math.pi / math.sqrt(5))
    assert leakage_after_N(rs, 0) == 1.0
    # max(|cos(pi sqrt 6.4)|, |cos(6 pi / sqrt 5)|)^5 by scalar evaluation
    assert leakage_after_N(rs, 5) == pytest.approx(0.04786300872638258, rel=1e-12)
    assert leakage_after_N(rs, 5) < 0.05
