"""Hermitian eigensolver, spectral matrix functions and resonance analysis.

The eigensolver is a cyclic complex Jacobi method.  Each sweep visits every
index pair once, grouped into round-robin rounds of disjoint pairs so that a
whole round is applied with vectorized row/column updates.  Matrices are
first split into the connected components of their sparsity pattern, so the
number-conserving operators used here are diagonalized one excitation
sector at a time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, IllPosedResonanceError, NegativeEigenvalueError, NotHermitianError
from .fockspace import Operator

OFFDIAG_RTOL = 1e-14
MAX_SWEEPS = 100
PSD_CLAMP = 1e-10
DEFAULT_RESONANCE_TOL = 1e-9
ILL_POSED_MARGIN = 1e-9


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Partition all pairs of ``range(n)`` into rounds of disjoint pairs (circle method)."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a: np.ndarray, tol: float, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray, int]:
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Stops once the off-diagonal Frobenius norm drops to ``tol`` or below.
    Returns ``(eigenvalues, eigenvectors, sweeps)`` unsorted.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n < 2:
        return a.diagonal().real.copy(), v, 0
    rounds = _round_robin(n)
    for sweep in range(max_sweeps + 1):
        if _offdiag_norm(a) <= tol:
            return a.diagonal().real.copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p, q in rounds:
            apq = a[p, q]
            mag = np.abs(apq)
            live = mag > 0.0
            if not live.any():
                continue
            safe = np.where(live, mag, 1.0)
            phase = np.where(live, apq / safe, 1.0)
            theta = (a[q, q].real - a[p, p].real) / (2.0 * safe)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(live, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # columns: A <- A J with J = diag(1, e^{-i phi}) @ [[c, s], [-s, c]] on (p, q)
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * (s * phase.conj())
            a[:, q] = cp * s + cq * (c * phase.conj())
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - (s * phase)[:, None] * rq
            a[q, :] = s[:, None] * rp + (c * phase)[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * (s * phase.conj())
            v[:, q] = vp * s + vq * (c * phase.conj())
    raise ConvergenceError(
        f"Jacobi iteration did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {_offdiag_norm(a):.3e} > {tol:.3e})"
    )


def eigh_matrix(m: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and unitary eigenvector columns of a Hermitian array."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    scale = float(np.linalg.norm(m))
    tol = OFFDIAG_RTOL * scale
    values = np.zeros(n)
    vectors = np.zeros((n, n), dtype=complex)
    if n == 0:
        return values, vectors
    n_blocks, labels = connected_components(csr_matrix(np.abs(m) > 0.0), directed=False)
    for b in range(n_blocks):
        idx = np.flatnonzero(labels == b)
        w, u, _ = jacobi_eigh(m[np.ix_(idx, idx)], tol, max_sweeps)
        values[idx] = w
        vectors[np.ix_(idx, idx)] = u
    order = np.argsort(values, kind="stable")
    return values[order], vectors[:, order]


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: Operator

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def apply_function(self, fn) -> Operator:
        """``U diag(fn(lambda)) U^+`` as an operator on the source basis."""
        u = self.eigenvectors
        return Operator(self.source.basis, (u * fn(self.eigenvalues)) @ u.conj().T)

    def projector(self, indices: Sequence[int]) -> np.ndarray:
        u = self.eigenvectors[:, list(indices)]
        return u @ u.conj().T


def hermitian_eig(op: Operator, max_sweeps: int = MAX_SWEEPS) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian operator.

    Raises
    ------
    NotHermitianError
        If the operator's Hermitian flag is not set.
    ConvergenceError
        If the Jacobi sweeps hit ``max_sweeps``.
    """
    if not op.hermitian:
        raise NotHermitianError("hermitian_eig requires a Hermitian operator")
    w, u = eigh_matrix(op.matrix, max_sweeps)
    return SpectralDecomposition(w, u, op)


def _as_decomposition(m: Union[Operator, SpectralDecomposition]) -> SpectralDecomposition:
    return m if isinstance(m, SpectralDecomposition) else hermitian_eig(m)


def _psd_clamped(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size and values.min() < -PSD_CLAMP:
        raise NegativeEigenvalueError(
            f"eigenvalue {values.min():.3e} below -{PSD_CLAMP:g}; input is not of the form Omega Omega^+"
        )
    return np.clip(values, 0.0, None)


def cos_sqrt(m: Union[Operator, SpectralDecomposition], gamma_tau: float) -> Operator:
    """``cos(gamma_tau * sqrt(M))`` for a positive semidefinite Hermitian ``M``."""
    dec = _as_decomposition(m)
    lam = _psd_clamped(dec.eigenvalues)
    return dec.apply_function(lambda _: np.cos(gamma_tau * np.sqrt(lam)))


def _sin_sqrt(m: Union[Operator, SpectralDecomposition], gamma_tau: float) -> Operator:
    dec = _as_decomposition(m)
    lam = _psd_clamped(dec.eigenvalues)
    return dec.apply_function(lambda _: np.sin(gamma_tau * np.sqrt(lam)))


@dataclass(frozen=True)
class ResonantMember:
    index: int
    eigenvalue: float
    l: int

    @property
    def parity(self) -> int:
        return -1 if self.l % 2 else 1


@dataclass(frozen=True)
class ResonantSet:
    """Eigenvalues ``w`` with ``gamma_tau * sqrt(w)`` a multiple of pi, within ``tolerance``."""

    gamma_tau: float
    tolerance: float
    members: tuple[ResonantMember, ...]
    leakage_bound: float
    n_eigenvalues: int

    @property
    def indices(self) -> list[int]:
        return [mem.index for mem in self.members]

    def member_eigenvalues(self) -> list[float]:
        return [mem.eigenvalue for mem in self.members]


def resonant_set(
    spectrum: Union[SpectralDecomposition, Sequence[float], np.ndarray],
    gamma_tau: float,
    tol: float = DEFAULT_RESONANCE_TOL,
) -> ResonantSet:
    """Classify eigenvalues into resonant members and leaking complement.

    ``spectrum`` may be a :class:`SpectralDecomposition` or a plain sequence of
    eigenvalues.  The leakage bound is the largest ``|cos(gamma_tau*sqrt(w))|``
    over non-members (0 if there are none).
    """
    if not gamma_tau > 0:
        raise ValueError(f"gamma_tau must be positive, got {gamma_tau}")
    if not 0 < tol < 0.1:
        raise ValueError(f"tolerance must lie in (0, 0.1), got {tol}")
    values = spectrum.eigenvalues if isinstance(spectrum, SpectralDecomposition) else np.asarray(spectrum, dtype=float)
    phases = gamma_tau * np.sqrt(_psd_clamped(values))
    ls = np.rint(phases / np.pi)
    dist = np.abs(phases - ls * np.pi)
    resonant = dist <= tol
    members = tuple(
        ResonantMember(int(k), float(values[k]), int(ls[k])) for k in np.flatnonzero(resonant)
    )
    rest = np.abs(np.cos(phases[~resonant]))
    leakage = float(rest.max()) if rest.size else 0.0
    if leakage >= 1.0 - ILL_POSED_MARGIN:
        k = int(np.flatnonzero(~resonant)[np.argmax(rest)])
        raise IllPosedResonanceError(
            f"eigenvalue {values[k]:.12g} is within floating noise of a resonance "
            f"(|cos| = {leakage:.15f}) but outside tolerance {tol:g}"
        )
    return ResonantSet(float(gamma_tau), float(tol), members, leakage, int(values.size))


def choose_gamma_tau(target_eigenvalue: float, l: int) -> float:
    """Coupling-time product making ``target_eigenvalue`` resonant with order ``l``."""
    if not target_eigenvalue > 0:
        raise ValueError(f"target eigenvalue must be positive, got {target_eigenvalue}")
    if int(l) != l or l < 1:
        raise ValueError(f"l must be a positive integer, got {l}")
    return int(l) * np.pi / np.sqrt(target_eigenvalue)


def leakage_after_N(rs: ResonantSet, N: int) -> float:
    """Worst-case surviving amplitude ratio of a non-member after ``N`` steps."""
    return float(rs.leakage_bound ** N)
