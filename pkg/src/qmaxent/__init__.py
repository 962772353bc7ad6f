"""Quantum maximum-entropy inference and Hamiltonian learning.

Dense spin-chain tooling for the moment-matching problem: build an
observable family, generate (or measure) target moments, and recover the
Gibbs-state parameters with iterative scaling, dual gradient descent, or
their quasi-Newton accelerations.  The analysis module turns the
convergence theory (update-map Jacobians, Hessian bounds, belief-
propagation derivative identities) into executable checks, and the
``qmaxent`` CLI drives solved, diagnosed, and benchmarked experiments.
"""

from .analysis import (
    BoundMargins,
    DiagnosticsReport,
    QbpCheck,
    diagnose_instance,
    empirical_rate,
    jacobian_gd,
    jacobian_qis,
    qbp_channel,
    qis_spectral_radius,
    spectral_radius,
    verify_bounds,
    verify_qbp_identities,
)
from .estimator import MaxEntEstimator
from .gibbs import (
    GibbsSnapshot,
    HessianBundle,
    dual_gradient,
    dual_objective,
    hessian,
    kl_divergence,
    snapshot,
)
from .linalg import (
    EigenDecomposition,
    eig_herm,
    exp_divided_difference_kernel,
    expm_herm,
    hs_inner,
    logm_herm,
    mat_fn,
)
from .model import (
    FAMILY_KINDS,
    GroundTruth,
    HamiltonianFamily,
    ObservableFamily,
    PauliTerm,
    ProblemInstance,
    build_family,
    complete_family,
    instance_from_weights,
    make_instance,
    normalize_family,
    pauli_to_dense,
    recover_weights,
)
from .rng import RandomStream
from .solvers import (
    SolverConfig,
    SolverTrace,
    anderson_update,
    bb_mixing,
    gd_step,
    lbfgs_step,
    qis_step,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "BoundMargins",
    "DiagnosticsReport",
    "EigenDecomposition",
    "FAMILY_KINDS",
    "GibbsSnapshot",
    "GroundTruth",
    "HamiltonianFamily",
    "HessianBundle",
    "MaxEntEstimator",
    "ObservableFamily",
    "PauliTerm",
    "ProblemInstance",
    "QbpCheck",
    "RandomStream",
    "SolverConfig",
    "SolverTrace",
    "anderson_update",
    "bb_mixing",
    "build_family",
    "complete_family",
    "diagnose_instance",
    "dual_gradient",
    "dual_objective",
    "eig_herm",
    "empirical_rate",
    "exp_divided_difference_kernel",
    "expm_herm",
    "gd_step",
    "hessian",
    "hs_inner",
    "instance_from_weights",
    "jacobian_gd",
    "jacobian_qis",
    "kl_divergence",
    "lbfgs_step",
    "logm_herm",
    "make_instance",
    "mat_fn",
    "normalize_family",
    "pauli_to_dense",
    "qbp_channel",
    "qis_spectral_radius",
    "qis_step",
    "recover_weights",
    "run",
    "snapshot",
    "spectral_radius",
    "verify_bounds",
    "verify_qbp_identities",
    "__version__",
]
