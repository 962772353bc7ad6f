"""Input validation helpers shared by the library and the estimator."""

from __future__ import annotations

import numpy as np

from .errors import NonHermitianError
from .linalg import HERMITIAN_ATOL, max_asymmetry

PSD_ATOL = 1e-12
SUM_ATOL = 1e-12


def as_operator_stack(operators, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Coerce a list/array of operators to a complex (m, d, d) stack.

    Every slice must be square, of matching dimension, and Hermitian
    within ``atol``.
    """
    stack = np.asarray(operators, dtype=np.complex128)
    if stack.ndim == 2:
        stack = stack[None, :, :]
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(
            f"expected a stack of square matrices, got shape {stack.shape}"
        )
    for j in range(stack.shape[0]):
        asym = max_asymmetry(stack[j])
        if asym > atol:
            raise NonHermitianError(asym, atol)
    return stack


def check_observables(stack: np.ndarray, require_complete: bool = False) -> None:
    """Check the observable-family constraints.

    Each operator must be PSD (min eigenvalue >= -1e-12) and the family
    sum must satisfy sum F_j <= I (max eigenvalue <= 1 + 1e-12); with
    ``require_complete`` the sum must equal I within 1e-12 Frobenius.
    """
    for j in range(stack.shape[0]):
        w = np.linalg.eigvalsh(stack[j])
        if w[0] < -PSD_ATOL:
            raise ValueError(
                f"observable {j} is not PSD: min eigenvalue {w[0]:.3e}"
            )
    total = stack.sum(axis=0)
    w = np.linalg.eigvalsh(total)
    if w[-1] > 1.0 + SUM_ATOL:
        raise ValueError(
            f"observable sum exceeds identity: max eigenvalue {w[-1]:.12f}"
        )
    if require_complete:
        resid = np.linalg.norm(total - np.eye(stack.shape[1]))
        if resid > SUM_ATOL:
            raise ValueError(
                f"family marked complete but ||sum F - I||_F = {resid:.3e}"
            )


def check_moments(alpha, m: int) -> np.ndarray:
    """Validate a target-moment vector: length m, entries in (0, 1]."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (m,):
        raise ValueError(f"expected {m} target moments, got shape {alpha.shape}")
    if not np.all(np.isfinite(alpha)):
        raise ValueError("target moments must be finite")
    if np.any(alpha <= 0.0) or np.any(alpha > 1.0 + 1e-12):
        raise ValueError("target moments must lie in (0, 1]")
    return alpha
