"""Dense complex linear algebra for small spin Hamiltonians.

Matrices are plain ``numpy`` complex arrays.  The module provides the three
operations the rest of the toolkit is built on: Kronecker products for
composite-system operators, Hermitian eigendecomposition, and the unitary
propagator exp(-i H t) of a Hermitian generator.  The eigensolver is a cyclic
Jacobi iteration (deterministic and accurate at the 6x6 sizes used here),
running either compiled or in pure numpy depending on the selected kernel
backend.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NoConvergenceError, NotHermitianError

HERMITICITY_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-14


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectrum of a Hermitian matrix.

    ``eigenvalues`` are real and ascending; the columns of ``eigenvectors``
    are the matching orthonormal eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def is_hermitian(m, rtol: float = HERMITICITY_RTOL) -> bool:
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    scale = np.max(np.abs(m))
    if scale == 0.0:
        return True
    return np.max(np.abs(m - m.conj().T)) <= rtol * scale


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry ((i*rb+k),(j*cb+l)) = a[i,j]*b[k,l]."""
    a = _as_matrix(a)
    b = _as_matrix(b)
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def eigh(h, check: bool = True) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Raises ``NotHermitianError`` when the input fails the Hermiticity check
    and ``NoConvergenceError`` when the sweep budget is exhausted.
    """
    h = _as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise NotHermitianError(f"matrix is not square: shape {h.shape}")
    if check and not is_hermitian(h):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    hs = 0.5 * (h + h.conj().T)  # symmetrize roundoff before iterating
    w, v, converged = _kernels.jacobi_eigh(hs, JACOBI_MAX_SWEEPS, JACOBI_TOL)
    if not converged:
        raise NoConvergenceError(
            f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )
    return EigenDecomposition(eigenvalues=np.asarray(w), eigenvectors=np.asarray(v))


def expm_hermitian_generator(h, t: float) -> np.ndarray:
    """Unitary exp(-i h t) for Hermitian h, via eigendecomposition."""
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    dec = eigh(h)
    return _kernels.expm_factored(dec.eigenvalues, dec.eigenvectors, t)


def expm_from_decomposition(dec: EigenDecomposition, t: float) -> np.ndarray:
    """exp(-i H t) reusing a cached eigendecomposition of H."""
    return _kernels.expm_factored(dec.eigenvalues, dec.eigenvectors, t)
