"""Everything evaluated at a dual parameter point.

One eigendecomposition per point serves the partition function, the
Gibbs state, its moments, the dual objective/gradient, and both Hessians
(of the partition function and of its logarithm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import SpectralDomainError
from .linalg import (
    EigenDecomposition,
    eig_herm,
    exp_divided_difference_kernel,
    logm_herm,
)
from .model import ObservableFamily


@dataclass
class GibbsSnapshot:
    """Cached spectral data of exp(lambda . F) / Z at one parameter point."""

    lam: np.ndarray
    family: ObservableFamily
    hamiltonian: np.ndarray
    eig: EigenDecomposition
    log_z: float
    state: np.ndarray
    moments: np.ndarray


@dataclass
class HessianBundle:
    """Second-order data of the partition function at a snapshot.

    ``log_partition_hessian`` is the Hessian of ln Z (the convex
    potential the solvers descend); ``partition_hessian`` the Hessian of
    Z itself; ``partition_gradient`` its gradient (the diagonal of the
    dominance bound); ``moments`` the first-order moments (diagonal of
    the scaling matrix in the iterative-update Jacobian); and
    ``moment_outer`` their rank-1 outer product linking the two Hessians
    via partition_hessian = Z (log_partition_hessian + moment_outer).
    """

    log_partition_hessian: np.ndarray
    partition_hessian: np.ndarray
    partition_gradient: np.ndarray
    moments: np.ndarray
    moment_outer: np.ndarray
    partition: float


def snapshot(
    lam: np.ndarray,
    obs: ObservableFamily,
    sigma0: np.ndarray | None = None,
) -> GibbsSnapshot:
    """Evaluate the Gibbs state of lambda . F (plus ln sigma0 if given).

    With the default reference state I/d the effective Hamiltonian is
    exactly ``lambda . F``; a general positive-definite ``sigma0`` adds
    its matrix logarithm before exponentiation.
    """
    lam = np.asarray(lam, dtype=np.float64)
    h = obs.assemble(lam)
    if sigma0 is not None:
        h = h + logm_herm(np.asarray(sigma0, dtype=np.complex128))
    eig = eig_herm(h)
    w = eig.eigenvalues
    w_max = float(w[-1])
    shifted = np.exp(w - w_max)
    z_shifted = float(shifted.sum())
    log_z = w_max + float(np.log(z_shifted))
    state = (eig.basis * (shifted / z_shifted)) @ eig.basis.conj().T
    moments = obs.moments(state)
    return GibbsSnapshot(
        lam=lam,
        family=obs,
        hamiltonian=h,
        eig=eig,
        log_z=log_z,
        state=state,
        moments=moments,
    )


def dual_objective(snap: GibbsSnapshot, alpha: np.ndarray) -> float:
    """ln Z - lambda . alpha, the convex dual of entropy maximization."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != snap.lam.shape:
        raise ValueError("alpha length does not match the parameter vector")
    return snap.log_z - float(snap.lam @ alpha)


def dual_gradient(snap: GibbsSnapshot, alpha: np.ndarray) -> np.ndarray:
    """Moments minus targets; zero exactly at the optimum."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != snap.moments.shape:
        raise ValueError("alpha length does not match the moment vector")
    return snap.moments - alpha


def hessian(snap: GibbsSnapshot) -> HessianBundle:
    """Both Hessians at the snapshot via the divided-difference kernel.

    The partition Hessian entry (j, k) contracts the eigenbasis-rotated
    observables against the kernel; the log-partition Hessian follows
    from it by the rank-1 correction.  Everything is evaluated with the
    spectrum shifted by its maximum, so intermediate exponentials stay
    bounded; the unshifted partition Hessian is rescaled at the end.
    """
    w = snap.eig.eigenvalues
    u = snap.eig.basis
    w_max = float(w[-1])
    if snap.log_z > 700.0:
        raise OverflowError(
            f"partition function overflows (ln Z = {snap.log_z:.1f})"
        )
    kernel_shifted = exp_divided_difference_kernel(w - w_max, 1.0)
    z_shifted = float(np.exp(snap.log_z - w_max))

    m = len(snap.family)
    stack = snap.family.operators
    rotated = np.matmul(np.matmul(u.conj().T[None, :, :], stack), u[None, :, :])
    flat = rotated.reshape(m, -1)
    weighted = (kernel_shifted[None, :, :] * rotated).reshape(m, -1)
    lam_shifted = (flat.conj() @ weighted.T).real
    lam_shifted = 0.5 * (lam_shifted + lam_shifted.T)

    p = snap.moments
    q = np.outer(p, p)
    log_partition_hessian = lam_shifted / z_shifted - q
    z = float(np.exp(snap.log_z))
    return HessianBundle(
        log_partition_hessian=log_partition_hessian,
        partition_hessian=lam_shifted * np.exp(w_max),
        partition_gradient=z * p,
        moments=p,
        moment_outer=q,
        partition=z,
    )


def kl_divergence(
    x: np.ndarray,
    y: np.ndarray,
    support_atol: float = 1e-12,
) -> float:
    """Divergence tr(X ln X - X ln Y - X + Y) for non-normalized inputs.

    X must be PSD; Y must be positive definite on the support of X.  A
    Y-kernel direction carrying more than ``support_atol`` of X's mass
    is a support violation.
    """
    eig_x = eig_herm(np.asarray(x, dtype=np.complex128))
    eig_y = eig_herm(np.asarray(y, dtype=np.complex128))
    wx = eig_x.eigenvalues
    wy = eig_y.eigenvalues
    scale_x = max(1.0, float(np.abs(wx).max()))
    if float(wx[0]) < -1e-12 * scale_x:
        raise SpectralDomainError(float(wx[0]), "kl_divergence (X not PSD)")

    wx_pos = np.clip(wx, 0.0, None)
    tr_x_ln_x = float(xlogy(wx_pos, wx_pos).sum())
    tr_x = float(wx_pos.sum())
    tr_y = float(wy.sum())

    # X's diagonal mass in Y's eigenbasis
    x_in_y = eig_y.basis.conj().T @ np.asarray(x, dtype=np.complex128) @ eig_y.basis
    mass = np.clip(np.diag(x_in_y).real, 0.0, None)
    tiny = 1e-15 * max(1.0, float(np.abs(wy).max()))
    degenerate = wy <= tiny
    if np.any(mass[degenerate] > support_atol):
        bad = float(wy[degenerate][np.argmax(mass[degenerate])])
        raise SpectralDomainError(bad, "kl_divergence (Y singular on supp X)")
    keep = ~degenerate
    tr_x_ln_y = float((mass[keep] * np.log(wy[keep])).sum())
    return tr_x_ln_x - tr_x_ln_y - tr_x + tr_y
