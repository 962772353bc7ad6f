"""scikit-learn style front end for moment-constrained Gibbs fitting."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .gibbs import snapshot
from .model import ObservableFamily, ProblemInstance
from .solvers import STATUS_CONVERGED, SolverConfig, run
from .validation import as_operator_stack, check_moments, check_observables


class MaxEntEstimator(BaseEstimator):
    """Learn Gibbs-state parameters that reproduce target moments.

    ``fit`` solves the backward mapping (target moments -> dual
    parameters) for a family of PSD observables summing below the
    identity; ``predict`` evaluates the forward mapping (expected values
    of operators under the fitted state).

    Parameters
    ----------
    method : {"qis", "gd", "am-qis", "lbfgs-gd"}
        Solver; the Anderson-accelerated fixed point is the default.
    eta : float, optional
        Learning rate for the gradient methods; defaults to the number
        of observables.
    history : int
        Mixing window / curvature memory of the accelerated methods.
    use_bb : bool
        Secant-based mixing parameter and inverse-Hessian seed.
    max_iters : int
        Update-step budget.
    tol : float
        Stopping threshold on the maximum moment residual (fits carry
        no known optimal value, so the residual is the stopping loss).
    rcond : float
        Relative singular-value cutoff in the mixing pseudo-inverse.
    beta : float
        Inverse temperature used when mapping the fitted dual
        parameters back to physical term weights.

    Attributes
    ----------
    lambda_ : ndarray of shape (m,)
        Fitted dual parameters.
    mu_ : ndarray of shape (n_base,)
        Recovered physical weights over the generating terms (gauge
        fixed on completed families).
    state_ : ndarray of shape (d, d)
        Fitted Gibbs state.
    moments_ : ndarray of shape (m,)
        Moments of the fitted state over the family.
    n_iter_ : int
        Update steps taken.
    converged_ : bool
    trace_ : SolverTrace
        Full per-iteration history.
    """

    def __init__(
        self,
        method: str = "am-qis",
        eta: float | None = None,
        history: int = 10,
        use_bb: bool = True,
        max_iters: int = 1000,
        tol: float = 1e-10,
        rcond: float = 1e-7,
        beta: float = 1.0,
    ):
        self.method = method
        self.eta = eta
        self.history = history
        self.use_bb = use_bb
        self.max_iters = max_iters
        self.tol = tol
        self.rcond = rcond
        self.beta = beta

    def _as_family(self, observables) -> ObservableFamily:
        if isinstance(observables, ObservableFamily):
            return observables
        stack = as_operator_stack(observables)
        return ObservableFamily(
            operators=stack, complete=False, n_base=stack.shape[0]
        )

    def fit(self, observables, moments):
        """Solve for dual parameters matching the target moments.

        Parameters
        ----------
        observables : ObservableFamily or array-like of shape (m, d, d)
            PSD operators with sum below the identity.
        moments : array-like of shape (m,)
            Target expected values, each in (0, 1].
        """
        family = self._as_family(observables)
        check_observables(family.operators, require_complete=False)
        alpha = check_moments(moments, len(family))
        instance = ProblemInstance(
            observables=family, alpha=alpha, beta=self.beta, ground_truth=None
        )
        config = SolverConfig(
            method=self.method,
            eta=self.eta,
            history=self.history,
            use_bb=self.use_bb,
            max_iters=self.max_iters,
            tol=self.tol,
            rcond=self.rcond,
        )
        trace = run(instance, config)

        from .model import recover_weights

        self.family_ = family
        self.trace_ = trace
        self.lambda_ = trace.final_lambda
        self.mu_ = recover_weights(instance, self.lambda_)
        self.n_iter_ = trace.n_iterations
        self.converged_ = trace.status == STATUS_CONVERGED
        snap = snapshot(self.lambda_, family)
        self.state_ = snap.state
        self.moments_ = snap.moments
        self.log_z_ = snap.log_z
        return self

    def predict(self, operators=None) -> np.ndarray:
        """Expected values of operators under the fitted Gibbs state.

        With no argument, returns the fitted family's moments.
        """
        if not hasattr(self, "state_"):
            raise NotFittedError(
                "this MaxEntEstimator instance is not fitted yet"
            )
        if operators is None:
            return self.moments_.copy()
        stack = as_operator_stack(operators)
        if stack.shape[1] != self.state_.shape[0]:
            raise ValueError(
                f"operator dimension {stack.shape[1]} does not match the "
                f"fitted state dimension {self.state_.shape[0]}"
            )
        return (stack.reshape(stack.shape[0], -1).conj() @ self.state_.ravel()).real

    def score(self, observables, moments) -> float:
        """Negative maximum moment residual of the fitted state.

        Larger is better; 0 is a perfect match.
        """
        if not hasattr(self, "state_"):
            raise NotFittedError(
                "this MaxEntEstimator instance is not fitted yet"
            )
        family = self._as_family(observables)
        alpha = check_moments(moments, len(family))
        predicted = family.moments(self.state_)
        return -float(np.abs(predicted - alpha).max())
