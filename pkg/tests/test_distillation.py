import math

import numpy as np
import pytest

from distill.distillation import (
    ProtocolConfig,
    conditional_operator,
    distillate_projector,
    efficiency_limit,
    full_dynamics_oracle,
    run_monte_carlo,
    run_postselected,
)
from distill.errors import DistillateAbsentError
from distill.fockspace import StateVector, commutator, fock_state, superposition, total_number
from distill.scenarios import CouplingScenario, angular_eigenstate_2d, cat_target
from distill.spectral import leakage_after_N

GT_CAT = math.pi / math.sqrt(5)
CAT = CouplingScenario.second_red_2d(4)
ALL_KINDS = [
    CouplingScenario.qnd(0.3, 6),
    CouplingScenario.blue_sideband(6),
    CouplingScenario.second_red_2d(6),
    CouplingScenario.second_red_3d(6),
]


def _random_state(basis, rng):
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return StateVector(basis, v).normalized()


def test_qnd_small_eta_is_scalar_cosine():
    sc = CouplingScenario.qnd(1e-4, 5)
    v = conditional_operator(sc, 0.9)
    assert np.abs(v.matrix - math.cos(0.9) * np.eye(6)).max() < 1e-6


def test_blue_sideband_square_is_fixed():
    sc = CouplingScenario.blue_sideband(8)
    four = fock_state(sc.basis, (4,))
    assert np.allclose((conditional_operator(sc, 2 * math.pi) @ four).amplitudes, four.amplitudes, atol=1e-12)


def test_extreme_angular_states_are_fixed():
    v = conditional_operator(CAT, GT_CAT)
    for m in (4, -4):
        s = angular_eigenstate_2d(4, m, CAT.basis)
        assert np.allclose((v @ s).amplitudes, s.amplitudes, atol=1e-12)


def test_projector_ranks():
    squares = distillate_projector(CouplingScenario.blue_sideband(16), 2 * math.pi)
    assert squares.rank == 5
    assert sorted(round(m.eigenvalue) for m in squares.resonances.members) == [0, 1, 4, 9, 16]
    assert squares.all_even
    assert np.allclose(squares.parity.matrix, squares.projector.matrix)

    cat = distillate_projector(CAT, GT_CAT)
    assert cat.rank == 2
    for m in (4, -4):
        s = angular_eigenstate_2d(4, m, CAT.basis)
        assert s.expectation(cat.projector).real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("scenario, gt", [(CAT, GT_CAT), (CouplingScenario.blue_sideband(16), 2 * math.pi)])
def test_projector_is_hermitian_idempotent(scenario, gt):
    p = distillate_projector(scenario, gt).projector
    assert p.hermitian
    assert np.abs((p @ p).matrix - p.matrix).max() < 1e-10


def test_odd_l_gives_sign_flip():
    sc = CouplingScenario.blue_sideband(4)
    dist = distillate_projector(sc, math.pi)  # n = 1 has l = 1, n = 4 has l = 2
    assert not dist.all_even
    one = fock_state(sc.basis, (1,))
    assert (dist.parity @ one).amplitude((1,)) == pytest.approx(-1.0)
    assert np.allclose(dist.parity_power(2).matrix, dist.projector.matrix, atol=1e-12)


def test_cat_distillation_fidelity_and_efficiency():
    phi0 = fock_state(CAT.basis, (4, 0))
    rec = run_postselected(ProtocolConfig(CAT, GT_CAT, 50, phi0, cat_target(4, 0.0, CAT.basis)))
    assert rec.fidelity_trace[4] >= 0.95
    assert rec.joint_prob == pytest.approx(0.125, abs=1e-3)
    assert rec.distillate_overlap == pytest.approx(0.125, abs=1e-12)
    assert rec.parity_sign == 1


def test_3d_w_state_distillation():
    sc = CouplingScenario.second_red_3d(2)
    w = superposition(sc.basis, [(2, 0, 0), (0, 2, 0), (0, 0, 2)])
    rec = run_postselected(ProtocolConfig(sc, GT_CAT, 50, fock_state(sc.basis, (2, 0, 0)), w))
    assert rec.fidelity_trace[4] >= 0.96
    assert rec.joint_prob == pytest.approx(1 / 3, abs=1e-3)


@pytest.mark.parametrize("scenario", ALL_KINDS, ids=lambda s: s.kind)
def test_record_invariants(scenario):
    rng = np.random.default_rng(7)
    phi0 = _random_state(scenario.basis, rng)
    gt = 1.1
    rec = run_postselected(ProtocolConfig(scenario, gt, 12, phi0))
    assert np.all((rec.per_step_probs >= 0) & (rec.per_step_probs <= 1))
    assert np.all(np.diff(rec.joint_probs) <= 1e-15)
    assert all(abs(s.norm() - 1) < 1e-12 for s in rec.conditional_states)
    v = conditional_operator(scenario, gt)
    assert rec.joint_prob == pytest.approx((v**12 @ phi0).norm() ** 2, abs=1e-10)
    assert rec.fidelity_trace is None


@pytest.mark.parametrize("scenario", ALL_KINDS[1:], ids=lambda s: s.kind)
def test_total_number_is_conserved_within_a_sector(scenario):
    v = conditional_operator(scenario, 0.7)
    assert np.abs(commutator(v, total_number(scenario.basis)).matrix).max() < 1e-10
    occ = (3,) + (0,) * (scenario.n_modes - 1) if scenario.n_modes > 1 else (3,)
    phi0 = fock_state(scenario.basis, occ)
    rec = run_postselected(ProtocolConfig(scenario, 0.7, 10, phi0))
    nt = total_number(scenario.basis)
    assert all(abs(s.expectation(nt).real - 3) < 1e-10 for s in rec.conditional_states)


def test_projector_limit():
    phi0 = fock_state(CAT.basis, (4, 0))
    dist = distillate_projector(CAT, GT_CAT)
    v = conditional_operator(CAT, GT_CAT)
    n = 50
    diff = ((v**n) @ phi0 - dist.parity_power(n) @ phi0).norm()
    assert diff <= leakage_after_N(dist.resonances, n) + 1e-12


def test_fixed_point_input():
    cat = cat_target(4, 0.0, CAT.basis)
    rec = run_postselected(ProtocolConfig(CAT, GT_CAT, 10, cat, cat))
    assert np.allclose(rec.per_step_probs, 1.0, atol=1e-12)
    assert np.allclose(rec.fidelity_trace, 1.0, atol=1e-12)
    ens = run_monte_carlo(ProtocolConfig(CAT, GT_CAT, 10, cat), 200, 3)
    assert ens.success_rate == 1.0


def test_orthogonal_input_raises():
    # blue sideband, n = 1, gamma tau = pi/2: cos(pi/2) vanishes to roundoff
    sc = CouplingScenario.blue_sideband(4)
    phi0 = fock_state(sc.basis, (1,))
    with pytest.raises(DistillateAbsentError) as info:
        run_postselected(ProtocolConfig(sc, math.pi / 2, 3, phi0))
    assert info.value.step == 1


def test_orthogonal_input_efficiency_decays():
    phi0 = fock_state(CAT.basis, (2, 0))
    lim = efficiency_limit(ProtocolConfig(CAT, GT_CAT, 60, phi0))
    assert lim.distillate_overlap == pytest.approx(0.0, abs=1e-14)
    assert lim.joint_prob < 1e-6
    assert lim.gap <= lim.bound + 1e-15


def test_config_validation():
    phi0 = fock_state(CAT.basis, (4, 0))
    with pytest.raises(ValueError):
        ProtocolConfig(CAT, 0.0, 5, phi0)
    with pytest.raises(ValueError):
        ProtocolConfig(CAT, 1.0, 0, phi0)
    with pytest.raises(ValueError):
        ProtocolConfig(CAT, 1.0, 5, phi0 * 2)
    with pytest.raises(ValueError):
        ProtocolConfig(CAT, 1.0, 5, fock_state(CouplingScenario.second_red_2d(5).basis, (4, 0)))


@pytest.mark.parametrize("scenario", ALL_KINDS, ids=lambda s: s.kind)
def test_oracle_equivalence(scenario):
    rng = np.random.default_rng(11)
    for gt in rng.uniform(0.1, 3.0, size=3):
        v = conditional_operator(scenario, gt)
        phi = _random_state(scenario.basis, rng)
        plus, minus = full_dynamics_oracle(scenario, gt, phi)
        assert np.abs(plus.amplitudes - (v @ phi).amplitudes).max() <= 1e-10
        assert minus.norm() ** 2 == pytest.approx(1 - (v @ phi).norm() ** 2, abs=1e-12)


def test_oracle_at_zero_time():
    phi = fock_state(CAT.basis, (1, 3))
    plus, minus = full_dynamics_oracle(CAT, 0.0, phi)
    assert np.allclose(plus.amplitudes, phi.amplitudes)
    assert minus.norm() < 1e-14


def test_monte_carlo_determinism():
    proto = ProtocolConfig(CAT, GT_CAT, 50, fock_state(CAT.basis, (4, 0)))
    a = run_monte_carlo(proto, 1, 42)
    b = run_monte_carlo(proto, 1, 42)
    assert a.successes == b.successes
    assert np.array_equal(a.failure_histogram, b.failure_histogram)
    c = run_monte_carlo(proto, 2000, 5)
    d = run_monte_carlo(proto, 2000, 5)
    assert np.array_equal(c.failure_histogram, d.failure_histogram) and c.successes == d.successes
    assert c.successes + c.failure_histogram.sum() == 2000
    assert c.success_rate == c.successes / c.trials
    assert abs(c.success_rate - c.expected_rate) <= 5 * c.binomial_sigma
    with pytest.raises(ValueError):
        run_monte_carlo(proto, 0, 1)
