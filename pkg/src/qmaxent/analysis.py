"""Convergence-rate theory as executable checks.

Closed-form Jacobians of both iteration maps, spectral radii, empirical
geometric rates, the operator-inequality suite on the Hessian bundle,
and the two belief-propagation representations of the matrix-exponential
derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gibbs, solvers
from .errors import InsufficientDataError
from .linalg import EigenDecomposition, eig_herm, EXP_OVERFLOW_LIMIT
from .model import ObservableFamily, ProblemInstance
from .validation import PSD_ATOL, SUM_ATOL

# Iterates closer to the fixed point than this are dominated by
# double-precision noise and are excluded from rate ratios.
RATE_DISTANCE_FLOOR = 1e-10

KERNEL_TAYLOR_CUTOFF = 1e-8


def jacobian_qis(bundle: gibbs.HessianBundle) -> np.ndarray:
    """Jacobian I - P^{-1} L of the iterative-scaling update map.

    P is the diagonal of current moments and L the log-partition
    Hessian; the matrix is similar to a symmetric one, so its spectrum
    is real.
    """
    p = bundle.moments
    if np.any(p <= 0.0):
        j = int(np.flatnonzero(p <= 0.0)[0])
        raise ValueError(f"moment {j} is zero; scaling Jacobian is singular")
    return np.eye(len(p)) - bundle.log_partition_hessian / p[:, None]


def jacobian_gd(bundle: gibbs.HessianBundle, eta: float) -> np.ndarray:
    """Jacobian I - eta L of the gradient-descent update map."""
    m = bundle.log_partition_hessian.shape[0]
    return np.eye(m) - eta * bundle.log_partition_hessian


def qis_jacobian_symmetrized(bundle: gibbs.HessianBundle) -> np.ndarray:
    """I - P^{-1/2} L P^{-1/2}, the symmetric similarity partner."""
    p = bundle.moments
    if np.any(p <= 0.0):
        raise ValueError("zero moment; symmetrized Jacobian undefined")
    root = np.sqrt(p)
    scaled = bundle.log_partition_hessian / root[:, None] / root[None, :]
    return np.eye(len(p)) - scaled


def spectral_radius(j: np.ndarray, symmetric: bool = False) -> float:
    """Largest absolute eigenvalue."""
    if symmetric:
        w = np.linalg.eigvalsh(j)
        return float(max(abs(w[0]), abs(w[-1])))
    return float(np.abs(np.linalg.eigvals(j)).max())


def qis_spectral_radius(bundle: gibbs.HessianBundle) -> float:
    """Spectral radius of the scaling Jacobian via its symmetric partner."""
    return spectral_radius(qis_jacobian_symmetrized(bundle), symmetric=True)


def empirical_rate(trace: solvers.SolverTrace, lambda_star: np.ndarray) -> float:
    """Median tail ratio ||x_{t+1} - x*|| / ||x_t - x*|| of a trace.

    Uses the last 10 ratios whose distances stay above the noise floor.
    Raises InsufficientDataError for traces of fewer than 12 iterations.
    """
    lambda_star = np.asarray(lambda_star, dtype=np.float64)
    if len(trace.lambdas) < 13:
        raise InsufficientDataError(
            f"need at least 12 iterations to estimate a rate, "
            f"got {len(trace.lambdas) - 1}"
        )
    dists = np.array(
        [np.linalg.norm(lam - lambda_star) for lam in trace.lambdas]
    )
    ratios = [
        dists[t + 1] / dists[t]
        for t in range(len(dists) - 1)
        if dists[t] >= RATE_DISTANCE_FLOOR and dists[t + 1] >= RATE_DISTANCE_FLOOR
    ]
    if len(ratios) == 0:
        raise InsufficientDataError("no iterates above the noise floor")
    return float(np.median(ratios[-10:]))


@dataclass
class BoundMargins:
    """Signed slack of each operator inequality (negative = violated).

    ``status`` is "ok" when the theorem hypotheses (PSD observables
    summing below the identity) hold, else "hypotheses-unmet"; margins
    are still reported but carry no guarantee in that case.
    """

    status: str
    psd_hypothesis_margin: float
    sum_hypothesis_margin: float
    min_eig_p_minus_l: float
    min_entry_partition_hessian: float
    min_colsum_dominance: float
    identity_residual: float
    q_rank: int
    partition: float

    @property
    def hypotheses_ok(self) -> bool:
        return self.status == "ok"


def verify_bounds(
    bundle: gibbs.HessianBundle, obs: ObservableFamily
) -> BoundMargins:
    """Evaluate the operator-inequality suite at one snapshot.

    Checks, in order: L <= P (via the smallest eigenvalue of P - L),
    entrywise nonnegativity of the partition Hessian, diagonal dominance
    of its gap to the partition-gradient diagonal (column sums), the
    rank-1 identity linking the two Hessians, and the rank of the moment
    outer product.
    """
    psd_margin = np.inf
    for j in range(len(obs)):
        w0 = float(np.linalg.eigvalsh(obs.operators[j])[0])
        psd_margin = min(psd_margin, w0)
    total = obs.operators.sum(axis=0)
    sum_margin = 1.0 - float(np.linalg.eigvalsh(total)[-1])
    status = (
        "ok"
        if psd_margin >= -PSD_ATOL and sum_margin >= -SUM_ATOL
        else "hypotheses-unmet"
    )

    l_mat = bundle.log_partition_hessian
    p = bundle.moments
    min_eig_p_minus_l = float(np.linalg.eigvalsh(np.diag(p) - l_mat)[0])
    lam_mat = bundle.partition_hessian
    min_entry = float(lam_mat.min())
    colsums = bundle.partition_gradient - lam_mat.sum(axis=0)
    min_colsum = float(colsums.min())
    z = bundle.partition
    identity_residual = float(
        np.linalg.norm(lam_mat - z * (l_mat + bundle.moment_outer)) / z
    )
    q_rank = int(np.linalg.matrix_rank(bundle.moment_outer))
    return BoundMargins(
        status=status,
        psd_hypothesis_margin=psd_margin,
        sum_hypothesis_margin=sum_margin,
        min_eig_p_minus_l=min_eig_p_minus_l,
        min_entry_partition_hessian=min_entry,
        min_colsum_dominance=min_colsum,
        identity_residual=identity_residual,
        q_rank=q_rank,
        partition=z,
    )


def _tanh_over_x(x: np.ndarray) -> np.ndarray:
    out = np.ones_like(x)
    big = np.abs(x) >= KERNEL_TAYLOR_CUTOFF
    out[big] = np.tanh(x[big]) / x[big]
    return out


def _sinh_over_x(x: np.ndarray) -> np.ndarray:
    out = np.ones_like(x)
    big = np.abs(x) >= KERNEL_TAYLOR_CUTOFF
    out[big] = np.sinh(x[big]) / x[big]
    return out


def qbp_channel(
    eig: EigenDecomposition,
    v: np.ndarray,
    beta: float,
    variant: str = "sandwich",
) -> np.ndarray:
    """Belief-propagation channel applied to a perturbation direction.

    In the eigenbasis of H the channel multiplies entry (a, b) of V by a
    kernel of the gap w_a - w_b: ``tanh(beta w/2)/(beta w/2)`` for the
    anticommutator representation, ``sinh(beta w/2)/(beta w/2)`` for the
    trace-preserving sandwich representation.  Both kernels equal 1 at
    zero gap.
    """
    if variant not in ("anticommutator", "sandwich"):
        raise ValueError(f"unknown variant {variant!r}")
    w = eig.eigenvalues
    x = 0.5 * beta * (w[:, None] - w[None, :])
    if float(np.abs(x).max(initial=0.0)) > EXP_OVERFLOW_LIMIT:
        raise OverflowError("channel kernel overflows for this beta and spectrum")
    kernel = _tanh_over_x(x) if variant == "anticommutator" else _sinh_over_x(x)
    u = eig.basis
    v_rot = u.conj().T @ np.asarray(v, dtype=np.complex128) @ u
    return u @ (kernel * v_rot) @ u.conj().T


@dataclass
class QbpCheck:
    """Relative deviations of both derivative representations.

    ``anticommutator_rel_err`` and ``sandwich_rel_err`` are measured
    against a central finite difference; ``forms_agreement`` is the
    mutual relative deviation of the two closed forms.
    """

    anticommutator_rel_err: float
    sandwich_rel_err: float
    forms_agreement: float
    min_eig_channel: float
    trace_defect: float


def verify_qbp_identities(
    h: np.ndarray, v: np.ndarray, beta: float, fd_step: float = 1e-5
) -> QbpCheck:
    """Compare both closed forms of d/ds exp(beta(H + sV)) at s = 0.

    The finite-difference reference uses a central step of ``fd_step``.
    The two closed forms are analytically identical; a mutual deviation
    beyond 1e-9 relative indicates an implementation fault and raises.
    """
    h = np.asarray(h, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    eig = eig_herm(h)
    w = eig.eigenvalues
    u = eig.basis

    exp_full = (u * np.exp(beta * w)) @ u.conj().T
    exp_half = (u * np.exp(0.5 * beta * w)) @ u.conj().T

    phi = qbp_channel(eig, v, beta, "anticommutator")
    psi = qbp_channel(eig, v, beta, "sandwich")
    d_anti = 0.5 * beta * (exp_full @ phi + phi @ exp_full)
    d_sand = beta * (exp_half @ psi @ exp_half)

    def _expm(mat):
        e = eig_herm(mat)
        return (e.basis * np.exp(e.eigenvalues)) @ e.basis.conj().T

    d_fd = (
        _expm(beta * (h + fd_step * v)) - _expm(beta * (h - fd_step * v))
    ) / (2.0 * fd_step)

    ref = float(np.linalg.norm(d_fd))
    anti_err = float(np.linalg.norm(d_anti - d_fd)) / ref
    sand_err = float(np.linalg.norm(d_sand - d_fd)) / ref
    agreement = float(np.linalg.norm(d_anti - d_sand)) / max(
        float(np.linalg.norm(d_anti)), float(np.linalg.norm(d_sand))
    )
    if agreement > 1e-9:
        raise ArithmeticError(
            f"closed derivative forms disagree ({agreement:.3e} relative); "
            "kernel implementation inconsistent"
        )
    min_eig_channel = float(np.linalg.eigvalsh(psi)[0])
    trace_defect = abs(float(np.trace(psi).real) - float(np.trace(v).real))
    return QbpCheck(
        anticommutator_rel_err=anti_err,
        sandwich_rel_err=sand_err,
        forms_agreement=agreement,
        min_eig_channel=min_eig_channel,
        trace_defect=trace_defect,
    )


@dataclass
class DiagnosticsReport:
    """Everything cmd-diagnose verifies at the solved point of an instance."""

    label: str
    lambda_star: np.ndarray
    jacobian_qis: np.ndarray
    jacobian_gd: np.ndarray
    spectral_radius_qis: float
    spectral_radius_qis_symmetrized: float
    spectral_radius_gd: float
    fd_spectral_radius_qis: float
    fd_spectral_radius_gd: float
    empirical_rate_qis: float | None
    min_eig_log_partition_hessian: float
    bounds: BoundMargins
    qbp: QbpCheck


def fd_jacobian(update_map, lam: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference Jacobian of an update map at a point."""
    lam = np.asarray(lam, dtype=np.float64)
    m = lam.shape[0]
    cols = []
    for j in range(m):
        e = np.zeros(m)
        e[j] = step
        cols.append((update_map(lam + e) - update_map(lam - e)) / (2.0 * step))
    return np.column_stack(cols)


def diagnose_instance(
    instance: ProblemInstance,
    eta: float | None = None,
    rate_trace: solvers.SolverTrace | None = None,
    qbp_directions: int = 3,
) -> DiagnosticsReport:
    """Run the full verification suite at an instance's solved point.

    Ground truth supplies the fixed point when recorded; otherwise a
    high-precision quasi-Newton solve (residual tolerance 1e-13) stands
    in.  ``rate_trace`` may pass a pre-computed plain-scaling trace for
    the empirical-rate section; without one a bounded run is made.
    """
    obs = instance.observables
    m = len(obs)
    eta_val = float(m) if eta is None else eta
    if instance.ground_truth is not None:
        lam_star = instance.ground_truth.lambda_star
    else:
        probe = solvers.run(
            instance,
            solvers.SolverConfig(method="lbfgs-gd", tol=1e-13, max_iters=500),
        )
        lam_star = probe.final_lambda

    snap = gibbs.snapshot(lam_star, obs)
    bundle = gibbs.hessian(snap)
    j_qis = jacobian_qis(bundle)
    j_gd = jacobian_gd(bundle, eta_val)
    r_qis = spectral_radius(j_qis)
    r_qis_sym = qis_spectral_radius(bundle)
    r_gd = spectral_radius(j_gd, symmetric=True)

    alpha = instance.alpha

    def qis_map(lam):
        s = gibbs.snapshot(lam, obs)
        return lam + solvers.qis_step(s, alpha)

    def gd_map(lam):
        s = gibbs.snapshot(lam, obs)
        return lam - eta_val * gibbs.dual_gradient(s, alpha)

    fd_r_qis = spectral_radius(fd_jacobian(qis_map, lam_star))
    fd_r_gd = spectral_radius(fd_jacobian(gd_map, lam_star))

    emp_rate = None
    trace = rate_trace
    if trace is None:
        trace = solvers.run(
            instance,
            solvers.SolverConfig(method="qis", tol=1e-11, max_iters=3000),
        )
    try:
        emp_rate = empirical_rate(trace, lam_star)
    except InsufficientDataError:
        emp_rate = None

    bounds = verify_bounds(bundle, obs)

    worst = None
    for j in range(min(qbp_directions, m)):
        check = verify_qbp_identities(
            snap.hamiltonian, obs.operators[j], beta=1.0
        )
        if worst is None or max(
            check.anticommutator_rel_err, check.sandwich_rel_err
        ) > max(worst.anticommutator_rel_err, worst.sandwich_rel_err):
            worst = check

    return DiagnosticsReport(
        label=instance.label,
        lambda_star=lam_star,
        jacobian_qis=j_qis,
        jacobian_gd=j_gd,
        spectral_radius_qis=r_qis,
        spectral_radius_qis_symmetrized=r_qis_sym,
        spectral_radius_gd=r_gd,
        fd_spectral_radius_qis=fd_r_qis,
        fd_spectral_radius_gd=fd_r_gd,
        empirical_rate_qis=emp_rate,
        min_eig_log_partition_hessian=float(
            np.linalg.eigvalsh(bundle.log_partition_hessian)[0]
        ),
        bounds=bounds,
        qbp=worst,
    )
