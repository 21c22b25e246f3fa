"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects.  The helpers here add the
contract checks (Hermiticity, size caps, density-matrix validity) and the
descending-order eigen-decomposition used for Bell-operator spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, SizeError

HERMITIAN_TOL = 1e-12
EIG_RESIDUAL_TOL = 1e-9
ORTHONORMAL_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

MAX_QUDIT_DIM = 16
MAX_MATRIX_DIM = MAX_QUDIT_DIM**2


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending; ``eigenvectors[:, k]`` pairs with ``eigenvalues[k]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def projector(self, indices) -> np.ndarray:
        """Orthogonal projector onto the span of the selected eigenvectors."""
        v = self.eigenvectors[:, list(indices)]
        return v @ v.conj().T


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def tensor_product(a: np.ndarray, b: np.ndarray, max_dim: int = MAX_MATRIX_DIM) -> np.ndarray:
    """Kronecker product of two matrices (or vectors), refusing results larger than ``max_dim``."""
    a = np.asarray(a)
    b = np.asarray(b)
    rows = (a.shape[0] if a.ndim else 1) * (b.shape[0] if b.ndim else 1)
    cols = (a.shape[1] if a.ndim > 1 else 1) * (b.shape[1] if b.ndim > 1 else 1)
    if max(rows, cols) > max_dim:
        raise SizeError(f"tensor product of size {rows}x{cols} exceeds cap {max_dim}")
    return np.kron(a, b)


def hermitian_asymmetry(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {m.shape}")
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    asym = hermitian_asymmetry(m)
    if asym > tol:
        raise ContractError(f"matrix is not Hermitian: max |M - M^dagger| = {asym:.3e} > {tol:.1e}")


def eig_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Full spectrum of a Hermitian matrix, eigenvalues in descending order."""
    m = np.asarray(m)
    check_hermitian(m, tol)
    if m.shape[0] > MAX_MATRIX_DIM:
        raise SizeError(f"matrix dimension {m.shape[0]} exceeds cap {MAX_MATRIX_DIM}")
    # symmetrise so that sub-tolerance asymmetry cannot leak into eigh
    herm = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(herm)
    order = np.argsort(w)[::-1]
    return EigenDecomposition(_freeze(w[order].copy()), _freeze(v[:, order].copy()))


def check_density_matrix(rho: np.ndarray, dim: int | None = None) -> None:
    """Raise :class:`ContractError` naming the first violated density-matrix property."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ContractError(f"density matrix must be square, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise ContractError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(rho)):
        raise ContractError("density matrix has non-finite entries")
    asym = hermitian_asymmetry(rho)
    if asym > HERMITIAN_TOL:
        raise ContractError(f"density matrix is not Hermitian (max asymmetry {asym:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ContractError(f"density matrix trace is {tr!r}, not 1")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam_min < -PSD_TOL:
        raise ContractError(f"density matrix is not positive semidefinite (min eigenvalue {lam_min:.3e})")


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def fidelity_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    """<psi|rho|psi> for a normalised pure reference ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ rho @ psi))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_separable_state(d: int, rng: np.random.Generator, terms: int = 4) -> np.ndarray:
    """Convex mixture of 1..``terms`` random pure product states on a d x d system."""
    # pure product components are the extreme points of the separable set
    weights = rng.dirichlet(np.ones(rng.integers(1, terms + 1)))
    rho = np.zeros((d * d, d * d), dtype=complex)
    for p in weights:
        rho += p * np.kron(random_density_matrix(d, rng, 1), random_density_matrix(d, rng, 1))
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real
