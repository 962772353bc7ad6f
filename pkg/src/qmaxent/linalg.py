"""Dense complex Hermitian linear algebra.

Eigendecomposition, spectral functional calculus, Hilbert-Schmidt inner
products, and the divided-difference kernel that carries every matrix-
exponential derivative in the package.  All operations are pure and the
returned arrays are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import EigensolverError, NonHermitianError, SpectralDomainError

HERMITIAN_ATOL = 1e-12

# Degenerate-pair threshold for divided differences: below this the
# analytic limit is used to avoid catastrophic cancellation.
DEGENERACY_RTOL = 1e-12

# exp overflows double precision near exp(709.78).
EXP_OVERFLOW_LIMIT = 700.0


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition A = basis @ diag(eigenvalues) @ basis^H.

    ``eigenvalues`` is ascending; ``basis`` columns are orthonormal
    eigenvectors.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.conj().T


def max_asymmetry(a: np.ndarray) -> float:
    """Largest entrywise magnitude of A - A^H."""
    return float(np.abs(a - a.conj().T).max())


def check_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate shape and Hermitian symmetry; return the array as complex."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    asym = max_asymmetry(a)
    if asym > atol:
        raise NonHermitianError(asym, atol)
    return a.astype(np.complex128, copy=False)


def eig_herm(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises
    ------
    NonHermitianError
        If the asymmetry exceeds ``atol``.
    EigensolverError
        If the LAPACK solver does not converge.
    """
    a = check_hermitian(a, atol)
    try:
        w, u = scipy.linalg.eigh(a, driver="evr", check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
    return EigenDecomposition(eigenvalues=w, basis=u)


def mat_fn(
    a: np.ndarray | EigenDecomposition,
    f: Callable[[np.ndarray], np.ndarray],
    name: str = "f",
) -> np.ndarray:
    """Spectral functional calculus: apply a scalar function eigenvalue-wise.

    ``f`` must accept an ndarray of eigenvalues.  Eigenvalues mapped to
    non-finite values are treated as domain violations.
    """
    eig = a if isinstance(a, EigenDecomposition) else eig_herm(a)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(eig.eigenvalues), dtype=np.float64)
    bad = ~np.isfinite(fw)
    if bad.any():
        offending = float(eig.eigenvalues[bad][0])
        raise SpectralDomainError(offending, name)
    return (eig.basis * fw) @ eig.basis.conj().T


def expm_herm(a: np.ndarray | EigenDecomposition) -> np.ndarray:
    """exp of a Hermitian matrix via its spectrum."""
    eig = a if isinstance(a, EigenDecomposition) else eig_herm(a)
    if float(eig.eigenvalues[-1]) > EXP_OVERFLOW_LIMIT:
        raise OverflowError(
            f"exp overflows: largest eigenvalue {eig.eigenvalues[-1]:.3f} > "
            f"{EXP_OVERFLOW_LIMIT}"
        )
    return mat_fn(eig, np.exp, name="exp")


def logm_herm(a: np.ndarray | EigenDecomposition) -> np.ndarray:
    """Matrix logarithm; requires a positive-definite input."""
    eig = a if isinstance(a, EigenDecomposition) else eig_herm(a)
    if float(eig.eigenvalues[0]) <= 0.0:
        raise SpectralDomainError(float(eig.eigenvalues[0]), "log")
    return mat_fn(eig, np.log, name="log")


def hs_inner(a: np.ndarray, b: np.ndarray, imag_atol: float = 1e-12) -> float:
    """Hilbert-Schmidt inner product tr(A^H B) for Hermitian inputs.

    The value is real for Hermitian A, B; the imaginary residue is
    checked against ``imag_atol * max(1, |value|)`` and discarded.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    val = np.vdot(a, b)
    scale = max(1.0, abs(val.real))
    if abs(val.imag) > imag_atol * scale:
        raise ValueError(
            f"inner product has non-negligible imaginary part {val.imag:.3e}"
        )
    return float(val.real)


def exp_divided_difference_kernel(
    eigenvalues: np.ndarray, beta: float = 1.0
) -> np.ndarray:
    """Divided-difference kernel of exp(beta x) over an eigenvalue grid.

    Entry (a, b) is ``(exp(beta w_a) - exp(beta w_b)) / (w_a - w_b)``,
    with the limit ``beta exp(beta w_a)`` on (near-)degenerate pairs.
    The derivative of ``exp(beta H)`` in direction V is the entrywise
    product of this kernel with V, both expressed in H's eigenbasis.

    The matrix is symmetric with strictly positive entries.  Off the
    degenerate branch the value is computed as
    ``exp(beta w_b) * expm1(beta (w_a - w_b)) / (w_a - w_b)``, which is
    stable for nearby eigenvalues.
    """
    w = np.asarray(eigenvalues, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("eigenvalues must be a 1-d array")
    if not np.all(np.isfinite(w)):
        raise ValueError("eigenvalues must be finite")
    if float(np.abs(beta * w).max(initial=0.0)) > EXP_OVERFLOW_LIMIT:
        raise OverflowError(
            f"exp overflows for |beta*eigenvalue| > {EXP_OVERFLOW_LIMIT}"
        )
    diff = w[:, None] - w[None, :]
    scale = np.maximum(1.0, np.maximum(np.abs(w)[:, None], np.abs(w)[None, :]))
    degenerate = np.abs(diff) <= DEGENERACY_RTOL * scale
    ew = np.exp(beta * w)
    safe_diff = np.where(degenerate, 1.0, diff)
    kernel = np.where(
        degenerate,
        beta * ew[:, None],
        ew[None, :] * np.expm1(beta * safe_diff) / safe_diff,
    )
    if not np.all(np.isfinite(kernel)):
        raise OverflowError("divided-difference kernel overflowed")
    return kernel


def frechet_exp(
    eig: EigenDecomposition, direction: np.ndarray, beta: float = 1.0
) -> np.ndarray:
    """Derivative of s -> exp(beta (H + s V)) at s = 0.

    H is given by its eigendecomposition; the result is the kernel-
    weighted direction rotated back out of the eigenbasis.
    """
    kernel = exp_divided_difference_kernel(eig.eigenvalues, beta)
    u = eig.basis
    v_tilde = u.conj().T @ direction @ u
    return u @ (kernel * v_tilde) @ u.conj().T
