"""Independent reference implementations used only to check the package.

Everything here deliberately avoids the code paths under test: series
where the library diagonalizes, quadrature where it uses divided
differences, probability vectors where it uses density matrices.
"""

from __future__ import annotations

import numpy as np


def taylor_expm(a: np.ndarray, terms: int = 30) -> np.ndarray:
    """Truncated exponential series sum_k A^k / k!."""
    a = np.asarray(a, dtype=np.complex128)
    out = np.eye(a.shape[0], dtype=np.complex128)
    power = np.eye(a.shape[0], dtype=np.complex128)
    for k in range(1, terms + 1):
        power = power @ a / k
        out = out + power
    return out


def taylor_log_trace_exp(a: np.ndarray, terms: int = 30) -> float:
    """ln tr exp(A) from the truncated series; needs moderate ||A||."""
    return float(np.log(np.trace(taylor_expm(a, terms)).real))


def fd_gradient(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        grad[j] = (f(x + e) - f(x - e)) / (2.0 * step)
    return grad


def fd_jacobian(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        cols.append((f(x + e) - f(x - e)) / (2.0 * step))
    return np.column_stack(cols)


def duhamel_derivative(
    h: np.ndarray, v: np.ndarray, beta: float, nodes: int = 64
) -> np.ndarray:
    """d/ds exp(beta(H+sV)) at s=0 by Gauss-Legendre quadrature of
    beta * integral_0^1 exp(t beta H) V exp((1-t) beta H) dt."""
    from scipy.linalg import expm

    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (x + 1.0)
    weights = 0.5 * w
    out = np.zeros_like(np.asarray(v, dtype=np.complex128))
    for ti, wi in zip(t, weights):
        out = out + wi * (expm(ti * beta * h) @ v @ expm((1.0 - ti) * beta * h))
    return beta * out


def classical_gis(features: np.ndarray, alpha: np.ndarray, iters: int) -> list:
    """Iterative scaling on a discrete distribution.

    ``features[j, x]`` are nonnegative feature values with
    ``sum_j features[j, x] <= 1``; the model is
    p(x) proportional to exp(sum_j lam_j features[j, x]) and the update is
    ``lam_j += ln alpha_j - ln E_p[f_j]``.  Returns the iterate list
    (length iters + 1, starting from zero).
    """
    m, _ = features.shape
    lam = np.zeros(m)
    out = [lam.copy()]
    for _ in range(iters):
        logits = lam @ features
        logits = logits - logits.max()
        p = np.exp(logits)
        p /= p.sum()
        expect = features @ p
        lam = lam + np.log(alpha) - np.log(expect)
        out.append(lam.copy())
    return out


def classical_covariance(features: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Covariance matrix of feature values under the induced distribution."""
    logits = lam @ features
    logits = logits - logits.max()
    p = np.exp(logits)
    p /= p.sum()
    mean = features @ p
    second = (features * p) @ features.T
    return second - np.outer(mean, mean)


def bfgs_explicit_update(
    h0: np.ndarray, s: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """One inverse-Hessian update (I - rho s y^T) H0 (I - rho y s^T) + rho s s^T."""
    rho = 1.0 / float(y @ s)
    eye = np.eye(h0.shape[0])
    left = eye - rho * np.outer(s, y)
    right = eye - rho * np.outer(y, s)
    return left @ h0 @ right + rho * np.outer(s, s)


def random_hermitian(rng: np.random.Generator, d: int, norm: float = 1.0):
    """Random Hermitian matrix rescaled to the requested spectral norm."""
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    a = 0.5 * (a + a.conj().T)
    top = float(np.abs(np.linalg.eigvalsh(a)).max())
    return a * (norm / top)


def random_psd(rng: np.random.Generator, d: int) -> np.ndarray:
    """Random PSD matrix with unit spectral norm."""
    b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    a = b @ b.conj().T
    return a / float(np.linalg.eigvalsh(a)[-1])
