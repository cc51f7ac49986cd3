"""Truncated multi-mode bosonic Fock spaces.

A :class:`FockBasis` enumerates occupation vectors ``(n_1, ..., n_d)`` in
lexicographic order under a truncation rule.  :class:`Operator` and
:class:`StateVector` are thin immutable wrappers around dense complex
numpy arrays that remember which basis they live on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, sqrt
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import BasisError

HERMITIAN_TOL = 1e-12

Occupation = tuple[int, ...]


@dataclass(frozen=True)
class PerMode:
    """Each mode holds at most ``max_occupation`` quanta."""

    max_occupation: int

    def admits(self, occ: Occupation) -> bool:
        return all(n <= self.max_occupation for n in occ)

    @property
    def bound(self) -> int:
        return self.max_occupation


@dataclass(frozen=True)
class TotalExcitation:
    """The total number of quanta over all modes is at most ``n_max``."""

    n_max: int

    def admits(self, occ: Occupation) -> bool:
        return sum(occ) <= self.n_max

    @property
    def bound(self) -> int:
        return self.n_max


@dataclass(frozen=True)
class ExactTotal:
    """Only occupations with exactly ``n_total`` quanta (one excitation sector)."""

    n_total: int

    def admits(self, occ: Occupation) -> bool:
        return sum(occ) == self.n_total

    @property
    def bound(self) -> int:
        return self.n_total


Truncation = Union[PerMode, TotalExcitation, ExactTotal]


@dataclass(frozen=True)
class FockBasis:
    n_modes: int
    truncation: Truncation
    states: tuple[Occupation, ...] = field(init=False, repr=False, compare=False)
    index: dict[Occupation, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_modes not in (1, 2, 3):
            raise BasisError(f"n_modes must be 1, 2 or 3, got {self.n_modes}")
        if not isinstance(self.truncation, (PerMode, TotalExcitation, ExactTotal)):
            raise BasisError(f"unknown truncation rule {self.truncation!r}")
        bound = self.truncation.bound
        if not isinstance(bound, (int, np.integer)) or bound < 0:
            raise BasisError(f"truncation parameter must be a non-negative integer, got {bound!r}")
        states = tuple(
            occ
            for occ in itertools.product(range(bound + 1), repeat=self.n_modes)
            if self.truncation.admits(occ)
        )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "index", {occ: i for i, occ in enumerate(states)})

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __contains__(self, occ) -> bool:
        return tuple(occ) in self.index

    def position(self, occ: Sequence[int]) -> int:
        occ = tuple(int(n) for n in occ)
        try:
            return self.index[occ]
        except KeyError:
            raise BasisError(f"occupation {occ} is not in {self}") from None

    def totals(self) -> np.ndarray:
        """Total excitation number of every basis state."""
        return np.array([sum(occ) for occ in self.states], dtype=int)

    def sector(self, n_total: int) -> FockBasis:
        """The sub-basis of states carrying exactly ``n_total`` quanta."""
        sub = FockBasis(self.n_modes, ExactTotal(n_total))
        if not all(occ in self.index for occ in sub.states):
            raise BasisError(f"sector N_T={n_total} is not fully contained in {self}")
        return sub

    def embedding(self, sub: FockBasis) -> np.ndarray:
        """Positions in ``self`` of each state of ``sub``."""
        if sub.n_modes != self.n_modes:
            raise BasisError("bases have different numbers of modes")
        try:
            return np.array([self.index[occ] for occ in sub.states], dtype=int)
        except KeyError as exc:
            raise BasisError(f"state {exc.args[0]} of {sub} is not in {self}") from None

    def label(self, i: int) -> str:
        return "|" + ",".join(str(n) for n in self.states[i]) + ">"


def build_basis(n_modes: int, truncation: Truncation) -> FockBasis:
    """Deterministic, lexicographically ordered truncated Fock basis.

    >>> build_basis(1, PerMode(2)).states
    ((0,), (1,), (2,))
    >>> build_basis(2, TotalExcitation(4)).dim
    15
    """
    return FockBasis(n_modes, truncation)


def expected_dimension(n_modes: int, truncation: Truncation) -> int:
    if isinstance(truncation, PerMode):
        return (truncation.max_occupation + 1) ** n_modes
    if isinstance(truncation, TotalExcitation):
        return comb(truncation.n_max + n_modes, n_modes)
    return comb(truncation.n_total + n_modes - 1, n_modes - 1)


def _check_same_basis(a: FockBasis, b: FockBasis):
    if a != b:
        raise BasisError(f"basis mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix acting on a :class:`FockBasis`.

    Supports ``+``, ``-``, scalar ``*``, ``@`` (with operators and states)
    and :meth:`dag`.  The ``hermitian`` flag is recomputed on every
    construction by an elementwise check at ``HERMITIAN_TOL``.
    """

    basis: FockBasis
    matrix: np.ndarray
    hermitian: bool = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise BasisError(f"matrix shape {m.shape} does not match basis dimension {self.basis.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        herm = m.size == 0 or float(np.max(np.abs(m - m.conj().T))) <= HERMITIAN_TOL
        object.__setattr__(self, "hermitian", bool(herm))

    @property
    def dim(self) -> int:
        return self.basis.dim

    def dag(self) -> Operator:
        return Operator(self.basis, self.matrix.conj().T)

    def __add__(self, other):
        if isinstance(other, Operator):
            _check_same_basis(self.basis, other.basis)
            return Operator(self.basis, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            _check_same_basis(self.basis, other.basis)
            return Operator(self.basis, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.basis, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex, np.number)):
            return Operator(self.basis, self.matrix * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_same_basis(self.basis, other.basis)
            return Operator(self.basis, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            _check_same_basis(self.basis, other.basis)
            return StateVector(self.basis, self.matrix @ other.amplitudes)
        return NotImplemented

    def __pow__(self, k: int):
        return Operator(self.basis, np.linalg.matrix_power(self.matrix, k))

    def restrict(self, sub: FockBasis) -> Operator:
        """Matrix block on the states of ``sub`` (a subset of this basis)."""
        idx = self.basis.embedding(sub)
        return Operator(sub, self.matrix[np.ix_(idx, idx)])

    def element(self, bra: Sequence[int], ket: Sequence[int]) -> complex:
        return complex(self.matrix[self.basis.position(bra), self.basis.position(ket)])


def identity(basis: FockBasis) -> Operator:
    return Operator(basis, np.eye(basis.dim, dtype=complex))


def zero(basis: FockBasis) -> Operator:
    return Operator(basis, np.zeros((basis.dim, basis.dim), dtype=complex))


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def compose(*ops: Operator, scalars: Iterable[complex] | None = None) -> Operator:
    """Linear combination ``sum_i c_i * op_i`` (all ``c_i = 1`` if omitted)."""
    if not ops:
        raise ValueError("compose needs at least one operator")
    coeffs = [1.0] * len(ops) if scalars is None else list(scalars)
    if len(coeffs) != len(ops):
        raise ValueError("one scalar per operator is required")
    result = coeffs[0] * ops[0]
    for c, op in zip(coeffs[1:], ops[1:]):
        result = result + c * op
    return result


def _check_mode(basis: FockBasis, mode: int):
    if not isinstance(mode, (int, np.integer)) or not 0 <= mode < basis.n_modes:
        raise BasisError(f"mode index {mode!r} invalid for a {basis.n_modes}-mode basis")


def annihilation(basis: FockBasis, mode: int) -> Operator:
    """Lowering operator of one mode; transitions leaving the basis are dropped."""
    _check_mode(basis, mode)
    m = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        n = occ[mode]
        if n == 0:
            continue
        target = occ[:mode] + (n - 1,) + occ[mode + 1:]
        row = basis.index.get(target)
        if row is not None:
            m[row, col] = sqrt(n)
    return Operator(basis, m)


def creation(basis: FockBasis, mode: int) -> Operator:
    return annihilation(basis, mode).dag()


def number_operator(basis: FockBasis, mode: int) -> Operator:
    _check_mode(basis, mode)
    return Operator(basis, np.diag([float(occ[mode]) for occ in basis.states]).astype(complex))


def total_number(basis: FockBasis) -> Operator:
    return Operator(basis, np.diag(basis.totals().astype(float)).astype(complex))


def angular_momentum_ops(basis: FockBasis) -> dict[str, Operator]:
    """Orbital angular momentum built from mode pairs, ``L_l = i(a_j a_k^+ - a_k a_j^+)``.

    Returns ``{"Lz"}`` for two modes and ``{"Lx", "Ly", "Lz", "L2"}`` for
    three.  The products are written normally ordered (``a_k^+ a_j``), which
    is the same operator for ``j != k`` but stays exact on the top
    excitation sector of a truncated basis.
    """
    if basis.n_modes not in (2, 3):
        raise BasisError(f"angular momentum needs 2 or 3 modes, got {basis.n_modes}")
    a = [annihilation(basis, i) for i in range(basis.n_modes)]
    ad = [op.dag() for op in a]

    def component(j, k):
        return 1j * (ad[k] @ a[j] - ad[j] @ a[k])

    if basis.n_modes == 2:
        return {"Lz": component(0, 1)}
    lx, ly, lz = component(1, 2), component(2, 0), component(0, 1)
    return {"Lx": lx, "Ly": ly, "Lz": lz, "L2": lx @ lx + ly @ ly + lz @ lz}


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitude vector over a :class:`FockBasis` (not necessarily normalized)."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (self.basis.dim,):
            raise BasisError(f"amplitude vector of length {v.size} does not match basis dimension {self.basis.dim}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> StateVector:
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / nrm)

    def inner(self, other: StateVector) -> complex:
        """``<self|other>``."""
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: StateVector) -> float:
        return abs(self.inner(other)) ** 2

    def expectation(self, op: Operator) -> complex:
        return self.inner(op @ self)

    def amplitude(self, occ: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.basis.position(occ)])

    def __add__(self, other):
        if isinstance(other, StateVector):
            _check_same_basis(self.basis, other.basis)
            return StateVector(self.basis, self.amplitudes + other.amplitudes)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, StateVector):
            _check_same_basis(self.basis, other.basis)
            return StateVector(self.basis, self.amplitudes - other.amplitudes)
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex, np.number)):
            return StateVector(self.basis, self.amplitudes * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def embed(self, larger: FockBasis) -> StateVector:
        """Same state written on a basis containing this one."""
        idx = larger.embedding(self.basis)
        v = np.zeros(larger.dim, dtype=complex)
        v[idx] = self.amplitudes
        return StateVector(larger, v)

    def restrict(self, sub: FockBasis) -> StateVector:
        """Components on the states of ``sub`` (no renormalization)."""
        return StateVector(sub, self.amplitudes[self.basis.embedding(sub)])


def fock_state(basis: FockBasis, occupation: Sequence[int]) -> StateVector:
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.position(occupation)] = 1.0
    return StateVector(basis, v)


def superposition(basis: FockBasis, occupations: Iterable[Sequence[int]]) -> StateVector:
    """Normalized equal-weight superposition of the listed Fock states."""
    v = np.zeros(basis.dim, dtype=complex)
    for occ in occupations:
        v[basis.position(occ)] += 1.0
    return StateVector(basis, v).normalized()
