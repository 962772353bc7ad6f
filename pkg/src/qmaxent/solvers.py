"""Iterative solvers for the dual problem.

Four methods share one driver: multiplicative iterative scaling ("qis"),
dual gradient descent ("gd"), Anderson-accelerated iterative scaling
("am-qis"), and limited-memory BFGS on the dual ("lbfgs-gd").  Every run
records a full per-iteration trace.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import gibbs
from .errors import SolverFailure
from .model import ProblemInstance
from .validation import check_moments

METHODS = ("qis", "gd", "am-qis", "lbfgs-gd")
ACCELERATED = ("am-qis", "lbfgs-gd")

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_FAILURE = "numerical_failure"

# An accelerated step that inflates the loss by this factor triggers a
# history reset and one plain step.
DIVERGENCE_FACTOR = 10.0

CURVATURE_RTOL = 1e-12


@dataclass
class SolverConfig:
    """Method selection and stopping/stability knobs.

    ``tol`` bounds the dual-objective gap when the optimal value is
    known (synthetic instances record it) and the maximum moment
    residual otherwise.  ``eta`` defaults to the number of observables.
    ``history`` is the mixing window for "am-qis" and the pair memory
    for "lbfgs-gd"; ``rcond`` is the relative singular-value cutoff of
    the mixing pseudo-inverse.
    """

    method: str = "qis"
    eta: float | None = None
    history: int = 10
    use_bb: bool = True
    max_iters: int = 20000
    tol: float = 1e-12
    rcond: float = 1e-7

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; pick from {METHODS}")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.eta is not None and self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.method in ACCELERATED and self.history < 1:
            raise ValueError("accelerated methods need history >= 1")


@dataclass
class SolverTrace:
    """Per-iteration history of one solver run.

    ``lambdas`` has one more entry than ``deltas`` (the final evaluated
    point takes no step).  ``gaps`` holds the dual-objective gap when the
    reference optimum is known, NaN otherwise.  ``wall_ns`` is wall time
    per iteration and is excluded from determinism guarantees.
    """

    method: str
    reference_value: float | None
    lambdas: list[np.ndarray] = field(default_factory=list)
    deltas: list[np.ndarray] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)
    wall_ns: list[int] = field(default_factory=list)
    status: str = STATUS_MAX_ITERS
    failure_message: str = ""

    @property
    def n_iterations(self) -> int:
        return len(self.deltas)

    @property
    def final_lambda(self) -> np.ndarray:
        return self.lambdas[-1]

    @property
    def final_gap(self) -> float:
        return self.gaps[-1]

    @property
    def final_residual(self) -> float:
        return self.residuals[-1]

    def steps_to_gap(self, precision: float) -> int | None:
        """First iteration index whose gap is at or below ``precision``.

        The initial point counts as index 0.  Returns None if never
        reached.
        """
        for t, g in enumerate(self.gaps):
            if np.isfinite(g) and g <= precision:
                return t
        return None


def qis_step(snap: gibbs.GibbsSnapshot, alpha: np.ndarray) -> np.ndarray:
    """Multiplicative update: delta_j = ln alpha_j - ln <F_j>.

    Zero exactly where the moment constraint already holds.
    """
    moments = snap.moments
    bad = np.flatnonzero(moments <= 0.0)
    if bad.size:
        j = int(bad[0])
        raise SolverFailure(
            f"moment {j} is non-positive ({moments[j]:.3e}); the observable "
            "is degenerate on the Gibbs support",
            index=j,
        )
    return np.log(alpha) - np.log(moments)


def gd_step(
    snap: gibbs.GibbsSnapshot, alpha: np.ndarray, eta: float
) -> np.ndarray:
    """Gradient step on the dual: -eta (moments - alpha)."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    return -eta * gibbs.dual_gradient(snap, alpha)


def bb_mixing(delta_x: np.ndarray, delta_r: np.ndarray) -> float:
    """Secant least-squares mixing parameter.

    Minimizes ``||delta_x + beta delta_r||_2``; returns 1 when the
    residual difference is numerically zero.
    """
    denom = float(delta_r @ delta_r)
    if denom <= 1e-300:
        return 1.0
    return -float(delta_r @ delta_x) / denom


def anderson_update(
    dx_history,
    dr_history,
    x: np.ndarray,
    r: np.ndarray,
    beta_t: float,
    rcond: float,
) -> np.ndarray:
    """One Anderson-mixing step for the fixed point of x -> x + r(x).

    With empty history this is the plain relaxed step ``x + beta_t r``.
    Otherwise the multi-secant correction
    ``x + beta_t r - (X + beta_t R) (R^T R)^+ R^T r`` is applied, with
    the pseudo-inverse truncating singular values below
    ``rcond * sigma_max``.
    """
    if len(dx_history) == 0:
        return x + beta_t * r
    x_cols = np.column_stack(list(dx_history))
    r_cols = np.column_stack(list(dr_history))
    gram = r_cols.T @ r_cols
    gamma = np.linalg.pinv(gram, rcond=rcond) @ (r_cols.T @ r)
    return x + beta_t * r - (x_cols + beta_t * r_cols) @ gamma


def lbfgs_step(gradient: np.ndarray, pairs, h0_scale: float) -> np.ndarray:
    """Two-loop recursion direction ``-H grad`` with H0 = h0_scale I.

    ``pairs`` is an iterable of (s, y) curvature pairs, oldest first;
    pairs without positive curvature are skipped.  With no usable pair
    the direction is plain steepest descent scaled by ``h0_scale``.
    """
    usable = []
    for s, y in pairs:
        ys = float(y @ s)
        if ys > CURVATURE_RTOL * np.linalg.norm(y) * np.linalg.norm(s):
            usable.append((s, y, 1.0 / ys))
    if not usable:
        return -h0_scale * gradient
    q = gradient.astype(np.float64, copy=True)
    alphas = []
    for s, y, rho in reversed(usable):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    q *= h0_scale
    for (s, y, rho), a in zip(usable, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


class _AndersonState:
    def __init__(self, history: int, use_bb: bool, rcond: float):
        self.dx = deque(maxlen=history)
        self.dr = deque(maxlen=history)
        self.use_bb = use_bb
        self.rcond = rcond
        self.x_prev: np.ndarray | None = None
        self.r_prev: np.ndarray | None = None

    def reset(self):
        self.dx.clear()
        self.dr.clear()
        self.x_prev = None
        self.r_prev = None

    def step(self, lam, snap, alpha, plain: bool) -> np.ndarray:
        r = qis_step(snap, alpha)
        if plain:
            self.reset()
        elif self.x_prev is not None:
            self.dx.append(lam - self.x_prev)
            self.dr.append(r - self.r_prev)
        if self.use_bb and len(self.dr) > 0:
            beta_t = bb_mixing(self.dx[-1], self.dr[-1])
        else:
            beta_t = 1.0
        x_next = anderson_update(self.dx, self.dr, lam, r, beta_t, self.rcond)
        self.x_prev = lam
        self.r_prev = r
        return x_next - lam


class _LbfgsState:
    def __init__(self, history: int, use_bb: bool, eta: float):
        self.pairs = deque(maxlen=history)
        self.use_bb = use_bb
        self.eta = eta
        self.x_prev: np.ndarray | None = None
        self.g_prev: np.ndarray | None = None

    def reset(self):
        self.pairs.clear()
        self.x_prev = None
        self.g_prev = None

    def step(self, lam, snap, alpha, plain: bool) -> np.ndarray:
        g = gibbs.dual_gradient(snap, alpha)
        if plain:
            self.reset()
        elif self.x_prev is not None:
            s = lam - self.x_prev
            y = g - self.g_prev
            ys = float(y @ s)
            if ys > CURVATURE_RTOL * np.linalg.norm(y) * np.linalg.norm(s):
                self.pairs.append((s, y))
        if self.use_bb and self.pairs:
            s, y = self.pairs[-1]
            h0 = float(y @ s) / float(y @ y)
        else:
            h0 = self.eta
        direction = lbfgs_step(g, self.pairs, h0)
        self.x_prev = lam
        self.g_prev = g
        return direction


def run(instance: ProblemInstance, config: SolverConfig) -> SolverTrace:
    """Drive one solver from lambda = 0 to convergence.

    Stops when the dual gap (or, without a recorded optimum, the
    maximum moment residual) drops to ``config.tol``, when
    ``config.max_iters`` update steps have been taken, or on numerical
    failure (trace retained up to the failure).
    """
    obs = instance.observables
    m = len(obs)
    alpha = check_moments(instance.alpha, m)
    reference = (
        instance.ground_truth.dual_optimum
        if instance.ground_truth is not None
        else None
    )
    eta = config.eta if config.eta is not None else float(m)
    trace = SolverTrace(method=config.method, reference_value=reference)

    accel = None
    if config.method == "am-qis":
        accel = _AndersonState(config.history, config.use_bb, config.rcond)
    elif config.method == "lbfgs-gd":
        accel = _LbfgsState(config.history, config.use_bb, eta)

    lam = np.zeros(m)
    prev_loss = np.inf
    t = 0
    while True:
        tic = time.perf_counter_ns()
        snap = gibbs.snapshot(lam, obs)
        objective = gibbs.dual_objective(snap, alpha)
        gap = objective - reference if reference is not None else float("nan")
        residual = float(np.abs(snap.moments - alpha).max())
        trace.lambdas.append(lam.copy())
        trace.objectives.append(objective)
        trace.gaps.append(gap)
        trace.residuals.append(residual)

        loss = gap if reference is not None else residual
        if not np.isfinite(objective) or not np.isfinite(residual):
            trace.status = STATUS_FAILURE
            trace.failure_message = "non-finite objective or residual"
            trace.wall_ns.append(time.perf_counter_ns() - tic)
            break
        if loss <= config.tol:
            trace.status = STATUS_CONVERGED
            trace.wall_ns.append(time.perf_counter_ns() - tic)
            break
        if t >= config.max_iters:
            trace.status = STATUS_MAX_ITERS
            trace.wall_ns.append(time.perf_counter_ns() - tic)
            break

        diverging = (
            accel is not None
            and np.isfinite(prev_loss)
            and prev_loss > 0.0
            and loss > DIVERGENCE_FACTOR * prev_loss
        )
        try:
            if config.method == "qis":
                delta = qis_step(snap, alpha)
            elif config.method == "gd":
                delta = gd_step(snap, alpha, eta)
            else:
                delta = accel.step(lam, snap, alpha, plain=diverging)
        except SolverFailure as exc:
            trace.status = STATUS_FAILURE
            trace.failure_message = str(exc)
            trace.wall_ns.append(time.perf_counter_ns() - tic)
            break
        if not np.all(np.isfinite(delta)):
            trace.status = STATUS_FAILURE
            trace.failure_message = "non-finite update step"
            trace.wall_ns.append(time.perf_counter_ns() - tic)
            break

        trace.deltas.append(delta)
        lam = lam + delta
        prev_loss = loss
        trace.wall_ns.append(time.perf_counter_ns() - tic)
        t += 1
    return trace
