"""Dense complex linear algebra substrate.

Vectors and operators are plain numpy arrays in double-precision complex.
The module adds the two structures everything else is built on: spectral
decompositions of Hermitian operators into distinct-eigenvalue blocks
(`Observable`), and unitary propagators generated by a constant
Hamiltonian (`Evolution`).

For anything degenerate, the projector onto the eigenspace is the
contract: downstream results must never depend on the arbitrary gauge of
the eigenvectors inside a degenerate block.  The eigenbasis is still
stored (one fixed orthonormal basis per block, as returned by ``eigh``)
because a few computations legitimately need explicit basis vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotHermitian, ValidationError

#: Relative gap below which two eigenvalues are treated as one degenerate level.
DEFAULT_DEGENERACY_TOL = 1e-9

_HERMITICITY_RTOL = 1e-12


def _as_square_complex(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermiticity_defect(matrix) -> float:
    """Frobenius norm of the anti-Hermitian part of ``matrix``."""
    a = _as_square_complex(matrix)
    return float(np.linalg.norm(a - a.conj().T))


def require_hermitian(matrix, *, rtol: float = _HERMITICITY_RTOL) -> np.ndarray:
    """Return the Hermitian part of ``matrix``, raising if the defect is large.

    The tolerance scales with max(1, ||matrix||_F) so that near-zero
    matrices are not rejected for round-off reasons.
    """
    a = _as_square_complex(matrix)
    defect = float(np.linalg.norm(a - a.conj().T))
    if defect > rtol * max(1.0, float(np.linalg.norm(a))):
        raise NotHermitian(
            f"matrix is not Hermitian: anti-Hermitian defect {defect:.3e}"
        )
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class Observable:
    """A Hermitian operator with its distinct-eigenvalue block structure.

    Attributes:
        matrix: the (N, N) Hermitian matrix.
        eigenvalues: (M,) strictly increasing distinct eigenvalues.
        projectors: (M, N, N) orthogonal projectors onto the eigenspaces.
        multiplicities: (M,) dimension of each eigenspace; sums to N.
        basis: (N, N) orthonormal eigenvector columns in ascending
            eigenvalue order; the gauge inside degenerate blocks is fixed
            but arbitrary.
        block_index: (N,) block label of each basis column.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    projectors: np.ndarray
    multiplicities: np.ndarray
    basis: np.ndarray
    block_index: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def block_count(self) -> int:
        return len(self.eigenvalues)

    @property
    def is_nondegenerate(self) -> bool:
        return bool(np.all(self.multiplicities == 1))

    def block_columns(self, block: int) -> np.ndarray:
        """Indices of the basis columns spanning the given block."""
        return np.flatnonzero(self.block_index == block)

    def relabeled(self, fn: Callable[[float], float]) -> "Observable":
        """Apply a strictly monotone function to the eigenvalues.

        The projectors and the stored eigenbasis are reused unchanged, so
        amplitudes computed from the result are bit-identical to the
        original's; only the eigenvalue labels (and, for a decreasing
        ``fn``, the canonical block order) change.
        """
        new_vals = np.array([fn(v) for v in self.eigenvalues], dtype=float)
        if len(new_vals) > 1:
            diffs = np.diff(new_vals)
            if np.all(diffs > 0):
                order = np.arange(len(new_vals))
            elif np.all(diffs < 0):
                order = np.arange(len(new_vals))[::-1]
            else:
                raise ValidationError("relabeling must be strictly monotone")
        else:
            order = np.arange(1)
        vals = new_vals[order]
        projs = self.projectors[order]
        mults = self.multiplicities[order]
        old_to_new = np.empty(len(order), dtype=int)
        old_to_new[order] = np.arange(len(order))
        # Reorder basis columns so they stay grouped by ascending block.
        col_order = np.concatenate(
            [np.flatnonzero(self.block_index == b) for b in order]
        )
        basis = np.ascontiguousarray(self.basis[:, col_order])
        block_index = old_to_new[self.block_index][col_order]
        new_matrix = np.tensordot(vals, projs, axes=(0, 0))
        return Observable(
            matrix=new_matrix,
            eigenvalues=vals,
            projectors=projs,
            multiplicities=mults,
            basis=basis,
            block_index=block_index,
        )

    def invariant_deviations(self) -> dict[str, float]:
        """Numeric residuals of the structural invariants, for checking.

        Returns completeness (sum of projectors vs identity), orthogonality
        (worst off-diagonal/idempotency defect) and reconstruction (matrix
        rebuilt from the spectral data vs the stored matrix).
        """
        eye = np.eye(self.dim)
        completeness = float(np.linalg.norm(self.projectors.sum(axis=0) - eye))
        ortho = 0.0
        for i in range(self.block_count):
            for j in range(self.block_count):
                prod = self.projectors[i] @ self.projectors[j]
                expect = self.projectors[i] if i == j else 0.0
                ortho = max(ortho, float(np.linalg.norm(prod - expect)))
        rebuilt = np.tensordot(self.eigenvalues, self.projectors, axes=(0, 0))
        reconstruction = float(np.linalg.norm(rebuilt - self.matrix))
        return {
            "completeness": completeness,
            "orthogonality": ortho,
            "reconstruction": reconstruction,
        }


def spectral_decompose(
    matrix, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL
) -> Observable:
    """Decompose a Hermitian matrix into distinct-eigenvalue blocks.

    Eigenvalues whose gap is below ``degeneracy_tol * max(1, ||H||)`` are
    merged into a single block with the summed projector (the merge is
    transitive over consecutive gaps).  Raises :class:`NotHermitian` if the
    input's anti-Hermitian part exceeds tolerance.
    """
    if degeneracy_tol <= 0:
        raise ValidationError("degeneracy_tol must be positive")
    h = require_hermitian(matrix)
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.abs(w).max())) if len(w) else 1.0
    return _group_spectrum(h, w, v, degeneracy_tol * scale)


def _group_spectrum(h, w, v, gap_tol) -> Observable:
    n = len(w)
    boundaries = [0]
    for i in range(1, n):
        if w[i] - w[i - 1] >= gap_tol:
            boundaries.append(i)
    boundaries.append(n)

    values, projectors, mults, block_index = [], [], [], np.empty(n, dtype=int)
    for b, (lo, hi) in enumerate(zip(boundaries[:-1], boundaries[1:])):
        cols = v[:, lo:hi]
        proj = cols @ cols.conj().T
        projectors.append(0.5 * (proj + proj.conj().T))
        values.append(float(np.mean(w[lo:hi])))
        mults.append(hi - lo)
        block_index[lo:hi] = b

    # A fixed memory layout keeps downstream matrix products bitwise
    # reproducible when observables are rebuilt (e.g. relabeled).
    return Observable(
        matrix=h,
        eigenvalues=np.asarray(values),
        projectors=np.ascontiguousarray(projectors),
        multiplicities=np.asarray(mults, dtype=int),
        basis=np.ascontiguousarray(v),
        block_index=block_index,
    )


class Evolution:
    """Unitary propagators exp(-i H dt) for a constant Hermitian Hamiltonian."""

    def __init__(self, hamiltonian):
        h = require_hermitian(hamiltonian)
        self.hamiltonian = h
        self._eigvals, self._eigvecs = np.linalg.eigh(h)

    @classmethod
    def zero(cls, dim: int) -> "Evolution":
        """Trivial evolution (H = 0): every propagator is the identity."""
        return cls(np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def propagator(self, t_from: float, t_to: float) -> np.ndarray:
        """U(t_to, t_from), mapping states at ``t_from`` to states at ``t_to``."""
        phases = np.exp(-1j * self._eigvals * (t_to - t_from))
        return (self._eigvecs * phases) @ self._eigvecs.conj().T


def evolve(evolution: Evolution, t_a: float, t_b: float) -> np.ndarray:
    """Propagator U(t_b, t_a) over the interval [t_a, t_b]."""
    return evolution.propagator(t_a, t_b)


def expi_hermitian(matrix, factor: float = 1.0) -> np.ndarray:
    """exp(1j * factor * H) for Hermitian H, via eigendecomposition."""
    h = require_hermitian(matrix)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * factor * w)) @ v.conj().T


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two operators; row-major index i_a*dim_b + i_b."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def tensor_vec(u, v) -> np.ndarray:
    """Kronecker product of two vectors; same index convention as `tensor`."""
    return np.kron(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex))
