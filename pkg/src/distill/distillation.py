"""Repeated-measurement distillation protocol.

After each interaction period the internal state of the ion is measured;
conditioned on finding it back in ``|+>`` the vibrational state is mapped by
``V = <+| exp(-i H_v tau) |+> = cos(gamma tau sqrt(Omega Omega^+))``.
Only the product ``gamma * tau`` enters, so the API takes ``gamma_tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DistillateAbsentError
from .fockspace import Operator, StateVector
from .scenarios import CouplingScenario, coupling_omega, omega_spectrum
from .spectral import (
    DEFAULT_RESONANCE_TOL,
    ResonantSet,
    cos_sqrt,
    leakage_after_N,
    resonant_set,
)

FAILURE_THRESHOLD = 1e-14


def conditional_operator(scenario: CouplingScenario, gamma_tau: float) -> Operator:
    """One-step conditional map ``V`` on the scenario's user-facing basis."""
    return cos_sqrt(omega_spectrum(scenario), gamma_tau)


@dataclass(frozen=True, eq=False)
class Distillate:
    """Projector onto the resonant eigenspaces and the one-step sign operator.

    ``parity`` is ``sum_k (-1)^{l_k} |w_k><w_k|`` over members, so that
    ``V^N -> parity^N`` (equivalently ``exp(-i P G P) P``) for large ``N``.
    """

    projector: Operator
    parity: Operator
    resonances: ResonantSet

    @property
    def rank(self) -> int:
        return len(self.resonances.members)

    def parity_power(self, N: int) -> Operator:
        return self.parity**N if N > 0 else self.projector

    @property
    def all_even(self) -> bool:
        return all(m.l % 2 == 0 for m in self.resonances.members)


def distillate_projector(
    scenario: CouplingScenario, gamma_tau: float, tol: float = DEFAULT_RESONANCE_TOL
) -> Distillate:
    dec = omega_spectrum(scenario)
    rs = resonant_set(dec, gamma_tau, tol)
    u = dec.eigenvectors[:, rs.indices]
    signs = np.array([m.parity for m in rs.members], dtype=float)
    basis = scenario.basis
    return Distillate(
        Operator(basis, u @ u.conj().T),
        Operator(basis, (u * signs) @ u.conj().T),
        rs,
    )


Target = Union[StateVector, Operator]


@dataclass(frozen=True, eq=False)
class ProtocolConfig:
    """One distillation experiment.

    ``target`` is either a state (fidelity ``|<target|psi>|^2``) or a
    projector (fidelity ``<psi|P|psi>``).
    """

    scenario: CouplingScenario
    gamma_tau: float
    steps: int
    initial_state: StateVector
    target: Optional[Target] = None
    tolerance: float = DEFAULT_RESONANCE_TOL

    def __post_init__(self):
        if not self.gamma_tau > 0:
            raise ValueError(f"gamma_tau must be positive, got {self.gamma_tau}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be an integer >= 1, got {self.steps!r}")
        if self.initial_state.basis != self.scenario.basis:
            raise ValueError("initial state must live on the scenario's basis")
        if abs(self.initial_state.norm() - 1.0) > 1e-12:
            raise ValueError(f"initial state is not normalized (norm {self.initial_state.norm():.15f})")
        if self.target is not None and self.target.basis != self.scenario.basis:
            raise ValueError("target must live on the scenario's basis")


def _fidelity(target: Optional[Target], psi: StateVector) -> Optional[float]:
    if target is None:
        return None
    if isinstance(target, Operator):
        return float(psi.expectation(target).real)
    return psi.fidelity(target) / target.norm() ** 2


@dataclass(frozen=True, eq=False)
class DistillationRecord:
    per_step_probs: np.ndarray
    joint_prob: float
    conditional_states: list[StateVector]
    fidelity_trace: Optional[np.ndarray]
    distillate_overlap: float
    distillate: Distillate = field(repr=False)

    @property
    def steps(self) -> int:
        return len(self.per_step_probs)

    @property
    def final_state(self) -> StateVector:
        return self.conditional_states[-1]

    @property
    def joint_probs(self) -> np.ndarray:
        """Running product of the per-step probabilities."""
        return np.cumprod(self.per_step_probs)

    @property
    def parity_sign(self) -> Optional[int]:
        """Common sign ``(-1)^{l N}`` of the surviving components, if they all agree."""
        signs = {m.parity ** self.steps for m in self.distillate.resonances.members}
        return signs.pop() if len(signs) == 1 else None


def run_postselected(config: ProtocolConfig) -> DistillationRecord:
    """Follow the all-success measurement branch for ``config.steps`` steps.

    Raises :class:`DistillateAbsentError` when a step's success probability
    drops below ``FAILURE_THRESHOLD``.
    """
    v = conditional_operator(config.scenario, config.gamma_tau)
    dist = distillate_projector(config.scenario, config.gamma_tau, config.tolerance)
    psi = config.initial_state
    probs, states, fids = [], [], []
    for k in range(1, config.steps + 1):
        out = v @ psi
        p = out.norm() ** 2
        if p < FAILURE_THRESHOLD:
            raise DistillateAbsentError(k, p)
        psi = out * (1.0 / np.sqrt(p))
        probs.append(min(p, 1.0))
        states.append(psi)
        fids.append(_fidelity(config.target, psi))
    overlap = float(config.initial_state.expectation(dist.projector).real)
    probs = np.array(probs)
    return DistillationRecord(
        per_step_probs=probs,
        joint_prob=float(np.prod(probs)),
        conditional_states=states,
        fidelity_trace=None if config.target is None else np.array(fids),
        distillate_overlap=overlap,
        distillate=dist,
    )


@dataclass(frozen=True)
class EfficiencyLimit:
    joint_prob: float
    distillate_overlap: float
    gap: float
    bound: float  # leakage_bound^(2N) * (1 - distillate_overlap)


def efficiency_limit(config: ProtocolConfig) -> EfficiencyLimit:
    """Compare the joint success probability with its large-N limit ``||P_d phi_0||^2``.

    ``gap`` can never exceed ``bound``: every non-resonant component is
    damped by at least ``leakage_bound`` per step.
    """
    rec = run_postselected(config)
    rs = rec.distillate.resonances
    bound = leakage_after_N(rs, 2 * config.steps) * max(1.0 - rec.distillate_overlap, 0.0)
    return EfficiencyLimit(
        rec.joint_prob, rec.distillate_overlap, abs(rec.joint_prob - rec.distillate_overlap), bound
    )


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """Outcome of sampling measurement records.

    ``failure_histogram[k]`` counts trials that first found ``|->`` at step
    ``k`` (index 0 unused).
    """

    trials: int
    seed: int
    successes: int
    success_rate: float
    failure_histogram: np.ndarray
    expected_rate: float

    @property
    def binomial_sigma(self) -> float:
        p = self.expected_rate
        return float(np.sqrt(p * (1 - p) / self.trials))


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Independent Philox stream for one trial, keyed by ``(seed, trial)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _sample_trial(probs: np.ndarray, seed: int, trial: int) -> int:
    """Step at which the trial fails, or 0 if every measurement succeeds."""
    u = trial_generator(seed, trial).random(len(probs))
    failed = np.flatnonzero(u >= probs)
    return int(failed[0]) + 1 if failed.size else 0


def _branch_probabilities(config: ProtocolConfig) -> np.ndarray:
    """Per-step success probabilities, zero from the step where the branch collapses."""
    v = conditional_operator(config.scenario, config.gamma_tau)
    psi = config.initial_state
    probs = np.zeros(config.steps)
    for k in range(config.steps):
        out = v @ psi
        p = out.norm() ** 2
        if p < FAILURE_THRESHOLD:
            break
        probs[k] = min(p, 1.0)
        psi = out * (1.0 / np.sqrt(p))
    return probs


def run_monte_carlo(config: ProtocolConfig, trials: int, seed: int) -> TrajectoryEnsemble:
    """Sample ``trials`` measurement records.

    Along the all-success branch the conditional state, and so every
    ``p_k``, is the same for every trial; a trial draws one uniform per step
    from its own stream and stops at the first ``u >= p_k``.
    """
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials!r}")
    probs = _branch_probabilities(config)
    hist = np.zeros(config.steps + 1, dtype=np.int64)
    for trial in range(trials):
        hist[_sample_trial(probs, seed, trial)] += 1
    successes = int(hist[0])
    hist[0] = 0
    return TrajectoryEnsemble(
        trials=int(trials),
        seed=int(seed),
        successes=successes,
        success_rate=successes / trials,
        failure_histogram=hist,
        expected_rate=float(np.prod(probs)),
    )


def full_dynamics_oracle(
    scenario: CouplingScenario, gamma_tau: float, state: StateVector
) -> tuple[StateVector, StateVector]:
    """Propagate ``state (x) |+>`` with the joint vibronic Hamiltonian.

    Builds ``H_v / gamma = Omega (x) sigma_+ + Omega^+ (x) sigma_-`` on the
    padded basis doubled by the internal states (``|+>`` block first) and
    exponentiates it through LAPACK's Hermitian eigensolver, independent of
    the Jacobi route used by :func:`conditional_operator`.

    Returns the ``|+>`` component on the user-facing basis and the ``|->``
    component on the padded basis.
    """
    omega = coupling_omega(scenario).matrix
    big = scenario.padded_basis
    n = big.dim
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, n:] = omega  # sigma_+ = |+><-|
    h[n:, :n] = omega.conj().T
    w, u = np.linalg.eigh(h)
    prop = (u * np.exp(-1j * gamma_tau * w)) @ u.conj().T
    psi0 = np.zeros(2 * n, dtype=complex)
    psi0[:n] = state.embed(big).amplitudes
    out = prop @ psi0
    plus = StateVector(big, out[:n]).restrict(scenario.basis)
    minus = StateVector(big, out[n:])
    return plus, minus
