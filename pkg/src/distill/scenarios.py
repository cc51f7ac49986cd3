"""Vibronic coupling scenarios and the special two- and three-mode state families.

Four couplings are supported, each fixing the vibrational operator ``Omega``
in ``H_v = gamma (Omega sigma_+ + Omega^+ sigma_-)``:

* ``qnd``            resonant carrier, ``Omega = f(a^+ a, eta)`` (Laguerre nonlinearity)
* ``blue_sideband``  first blue sideband in the Lamb-Dicke limit, ``Omega = a^+``
* ``second_red_2d``  two second-red-sideband beams, ``Omega = a_x^2 + a_y^2``
* ``second_red_3d``  three beams, ``Omega = a_x^2 + a_y^2 + a_z^2``
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import BasisError
from .fockspace import (
    FockBasis,
    Operator,
    PerMode,
    StateVector,
    TotalExcitation,
    angular_momentum_ops,
    annihilation,
    creation,
    fock_state,
)
from .spectral import eigh_matrix, hermitian_eig

MARGIN = 2

KINDS = ("qnd", "blue_sideband", "second_red_2d", "second_red_3d")
_MODES = {"qnd": 1, "blue_sideband": 1, "second_red_2d": 2, "second_red_3d": 3}


@dataclass(frozen=True)
class CouplingScenario:
    """Which ``Omega`` the lasers realize, on a basis truncated at ``n_use`` quanta.

    ``basis`` is the user-facing basis; ``padded_basis`` carries two extra
    quanta so that ``Omega Omega^+`` (which raises by two before lowering)
    is exact on every state of ``basis``.
    """

    kind: str
    n_use: int
    eta: Optional[float] = None
    mode: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        if int(self.n_use) != self.n_use or self.n_use < 0:
            raise BasisError(f"n_use must be a non-negative integer, got {self.n_use!r}")
        if self.kind == "qnd":
            if self.eta is None or not self.eta > 0:
                raise ValueError(f"qnd scenario needs a Lamb-Dicke parameter eta > 0, got {self.eta!r}")
        elif self.eta is not None:
            raise ValueError(f"eta is only meaningful for the qnd scenario, not {self.kind}")
        if not 0 <= self.mode < self.n_modes:
            raise BasisError(f"mode {self.mode} incompatible with {self.n_modes}-mode scenario {self.kind}")

    @classmethod
    def qnd(cls, eta: float, n_use: int, mode: int = 0) -> CouplingScenario:
        return cls("qnd", n_use, eta=float(eta), mode=mode)

    @classmethod
    def blue_sideband(cls, n_use: int, mode: int = 0) -> CouplingScenario:
        return cls("blue_sideband", n_use, mode=mode)

    @classmethod
    def second_red_2d(cls, n_use: int) -> CouplingScenario:
        return cls("second_red_2d", n_use)

    @classmethod
    def second_red_3d(cls, n_use: int) -> CouplingScenario:
        return cls("second_red_3d", n_use)

    @property
    def n_modes(self) -> int:
        return _MODES[self.kind]

    def _truncation(self, bound: int):
        return PerMode(bound) if self.n_modes == 1 else TotalExcitation(bound)

    @property
    def basis(self) -> FockBasis:
        return _basis(self.n_modes, self._truncation(self.n_use))

    @property
    def padded_basis(self) -> FockBasis:
        return _basis(self.n_modes, self._truncation(self.n_use + MARGIN))


@lru_cache(maxsize=None)
def _basis(n_modes, truncation) -> FockBasis:
    return FockBasis(n_modes, truncation)


def laguerre_f(n: int, eta: float) -> float:
    """Carrier matrix element ``exp(-eta^2/2) L_n(eta^2)``.

    Uses the three-term recurrence
    ``(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}``.
    """
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    x = eta * eta
    prev, cur = 1.0, 1.0 - x
    if n == 0:
        cur = 1.0
    for k in range(1, int(n)):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return math.exp(-x / 2) * cur


@lru_cache(maxsize=64)
def coupling_omega(scenario: CouplingScenario) -> Operator:
    """``Omega`` for the scenario, on its padded basis."""
    basis = scenario.padded_basis
    if scenario.kind == "qnd":
        diag = [laguerre_f(occ[scenario.mode], scenario.eta) for occ in basis.states]
        return Operator(basis, np.diag(diag).astype(complex))
    if scenario.kind == "blue_sideband":
        return creation(basis, scenario.mode)
    a = [annihilation(basis, i) for i in range(scenario.n_modes)]
    omega = a[0] @ a[0]
    for op in a[1:]:
        omega = omega + op @ op
    return omega


@lru_cache(maxsize=64)
def omega_omega_dag(scenario: CouplingScenario) -> Operator:
    """``Omega Omega^+`` restricted to the user-facing basis, where it is exact."""
    omega = coupling_omega(scenario)
    return (omega @ omega.dag()).restrict(scenario.basis)


@lru_cache(maxsize=64)
def omega_spectrum(scenario: CouplingScenario):
    return hermitian_eig(omega_omega_dag(scenario))


# --- two-mode SU(2) states ---------------------------------------------------


@dataclass(frozen=True)
class SU2Label:
    """Two-mode binomial state label ``|mu, j>`` with ``2j`` quanta.

    ``mu=None`` is the point at infinity (all quanta in the second mode).
    """

    mu: Optional[complex]
    two_j: int

    def __post_init__(self):
        if int(self.two_j) != self.two_j or self.two_j < 0:
            raise ValueError(f"2j must be a non-negative integer, got {self.two_j!r}")

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def at_infinity(self) -> bool:
        return self.mu is None

    @classmethod
    def from_theta(cls, theta: float, n_total: int) -> SU2Label:
        """Rotated Fock label ``mu = tan(theta)``; ``theta = pi/2 (mod pi)`` maps to infinity."""
        reduced = math.remainder(theta, math.pi)
        if math.isclose(abs(reduced), math.pi / 2, rel_tol=0.0, abs_tol=1e-15):
            return cls(None, n_total)
        return cls(math.tan(reduced), n_total)


def _two_mode(basis: FockBasis):
    if basis.n_modes != 2:
        raise BasisError(f"two-mode state requested on a {basis.n_modes}-mode basis")


def su2_state(label: SU2Label, basis: FockBasis) -> StateVector:
    _two_mode(basis)
    n = label.two_j
    if label.at_infinity:
        return fock_state(basis, (0, n))
    mu = complex(label.mu)
    v = np.zeros(basis.dim, dtype=complex)
    norm = (1 + abs(mu) ** 2) ** (n / 2)
    for k in range(n + 1):
        v[basis.position((n - k, k))] = math.sqrt(math.comb(n, k)) * mu**k / norm
    return StateVector(basis, v)


def rotated_fock(n_total: int, theta: float, basis: FockBasis) -> StateVector:
    """``n_total`` quanta in the mode along angle ``theta`` from the x axis."""
    return su2_state(SU2Label.from_theta(theta, n_total), basis)


def su2_overlap(l1: SU2Label, l2: SU2Label) -> complex:
    """Closed-form ``<mu1, j1 | mu2, j2>``."""
    if l1.two_j != l2.two_j:
        return 0j
    n = l1.two_j
    j = n / 2
    if l1.at_infinity and l2.at_infinity:
        return 1 + 0j
    if l1.at_infinity:
        mu = complex(l2.mu)
        return mu**n / (1 + abs(mu) ** 2) ** j
    if l2.at_infinity:
        mu = complex(l1.mu)
        return mu.conjugate() ** n / (1 + abs(mu) ** 2) ** j
    m1, m2 = complex(l1.mu), complex(l2.mu)
    return (1 + m1.conjugate() * m2) ** n / ((1 + abs(m1) ** 2) ** j * (1 + abs(m2) ** 2) ** j)


def angular_eigenstate_2d(n_total: int, m: int, basis: FockBasis) -> StateVector:
    """``|n_T, m>`` built from circular quanta ``a_pm = (a_x -/+ i a_y)/sqrt 2``.

    With ``n_pm = (n_T +/- m)/2`` circular quanta the state is
    ``(a_+^+)^{n_+} (a_-^+)^{n_-} |0> / sqrt(n_+! n_-!)``, an eigenstate of
    ``L_z`` with eigenvalue ``m``.
    """
    _two_mode(basis)
    if abs(m) > n_total or (n_total - m) % 2:
        raise ValueError(f"no state with n_T={n_total}, m={m}: need |m| <= n_T and m = n_T (mod 2)")
    n_plus, n_minus = (n_total + m) // 2, (n_total - m) // 2
    plus = np.array([math.comb(n_plus, k) * 1j**k for k in range(n_plus + 1)])
    minus = np.array([math.comb(n_minus, k) * (-1j) ** k for k in range(n_minus + 1)])
    poly = np.convolve(plus, minus)  # coefficient of (a_x^+)^{n-k} (a_y^+)^k
    scale = 2 ** (n_total / 2) * math.sqrt(math.factorial(n_plus) * math.factorial(n_minus))
    v = np.zeros(basis.dim, dtype=complex)
    for k, coeff in enumerate(poly):
        v[basis.position((n_total - k, k))] = (
            coeff * math.sqrt(math.factorial(n_total - k) * math.factorial(k)) / scale
        )
    return StateVector(basis, v)


def cat_target(n_total: int, theta: float, basis: FockBasis) -> StateVector:
    """Angular-momentum cat ``(|n, n> + e^{2 i n theta} |n, -n>)/sqrt 2``."""
    up = angular_eigenstate_2d(n_total, n_total, basis)
    down = angular_eigenstate_2d(n_total, -n_total, basis)
    return (up + cmath.exp(2j * n_total * theta) * down) * (1 / math.sqrt(2))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-12 * np.abs(v).max()))
    return v * (abs(v[k]) / v[k])


def angular_eigenbasis_3d(n_total: int, l: int, basis: FockBasis) -> list[StateVector]:
    """Orthonormal basis of the ``N_T = n_total``, ``L^2 = l(l+1)`` eigenspace.

    States are ordered by ascending ``L_z`` eigenvalue ``m = -l..l``; each
    is phased so its first non-negligible amplitude is real positive.
    """
    if basis.n_modes != 3:
        raise BasisError(f"three-mode basis required, got {basis.n_modes} modes")
    if l < 0 or l > n_total or (n_total - l) % 2:
        raise ValueError(f"l={l} is not allowed at n_T={n_total}: need l <= n_T and l = n_T (mod 2)")
    sector = basis.sector(n_total)
    ops = angular_momentum_ops(basis)
    l2 = ops["L2"].restrict(sector)
    lz = ops["Lz"].restrict(sector).matrix
    dec = hermitian_eig(l2)
    block = dec.eigenvectors[:, np.abs(dec.eigenvalues - l * (l + 1)) < 1e-8]
    if block.shape[1] != 2 * l + 1:
        raise ValueError(
            f"L^2 eigenspace for l={l} at n_T={n_total} has dimension {block.shape[1]}, expected {2 * l + 1}"
        )
    _, rotation = eigh_matrix(block.conj().T @ lz @ block)
    vectors = block @ rotation
    return [StateVector(sector, _fix_phase(vectors[:, i])).embed(basis) for i in range(vectors.shape[1])]
