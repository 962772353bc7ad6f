"""Symbolic Pauli Hamiltonians, benchmark families, and synthetic instances.

The three named families follow the usual 1-d spin-chain constructions:

* ``ising``: n transverse sigma_x terms plus n-1 nearest-neighbour
  sigma_z sigma_z couplings (2n-1 terms, open chain).
* ``transversal1d``: 12 translation-invariant sums, one per single-site
  axis and one per ordered axis pair on neighbouring sites (periodic);
  each term is a sum over n sites, so the family prescale is n.
* ``local1d``: site-resolved version of the above, 3n single-site plus
  9n coupling terms (periodic), each a single unit-norm Pauli string.

Synthetic instances draw one standard-normal coefficient per term from
the package's fixed random stream, assemble the Hamiltonian, divide it
by the qubit count, and record the exact dual optimum of the induced
moment-matching problem as ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CapacityError, NormalizationError
from .linalg import eig_herm
from .rng import RandomStream
from .validation import PSD_ATOL

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
}

FAMILY_KINDS = ("ising", "transversal1d", "local1d")

DEFAULT_MAX_QUBITS = 12


@dataclass(frozen=True)
class PauliTerm:
    """A weighted Pauli string: factors are (site, axis) with sites 1-based."""

    n_qubits: int
    factors: tuple[tuple[int, str], ...]
    coefficient: float = 1.0

    def __post_init__(self):
        sites = [s for s, _ in self.factors]
        if len(set(sites)) != len(sites):
            raise ValueError(f"duplicate sites in Pauli term: {sites}")
        for site, axis in self.factors:
            if not 1 <= site <= self.n_qubits:
                raise ValueError(
                    f"site {site} outside 1..{self.n_qubits}"
                )
            if axis not in PAULI:
                raise ValueError(f"unknown Pauli axis {axis!r}")


def pauli_to_dense(
    term: PauliTerm, max_qubits: int = DEFAULT_MAX_QUBITS
) -> np.ndarray:
    """Dense 2^n x 2^n realization; qubit 1 is the leftmost tensor factor."""
    if term.n_qubits > max_qubits:
        raise CapacityError(
            f"{term.n_qubits} qubits exceeds the dense-matrix budget of "
            f"{max_qubits} (override via max_qubits)"
        )
    by_site = dict(term.factors)
    out = np.array([[term.coefficient]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    for site in range(1, term.n_qubits + 1):
        out = np.kron(out, PAULI.get(by_site.get(site, ""), eye))
    return out


@dataclass
class HamiltonianFamily:
    """A list of Hermitian terms with weights and a norm prescale.

    ``terms[j] / prescale`` is the unit-norm-bounded operator that the
    weight ``weights[j]`` multiplies; the observable construction and
    the parameter mapping both work with these prescaled terms.
    """

    kind: str
    n_qubits: int
    labels: list[str]
    terms: np.ndarray  # (m, d, d) complex stack of raw terms
    weights: np.ndarray  # (m,) drawn coefficients
    prescale: float = 1.0

    def __len__(self) -> int:
        return self.terms.shape[0]

    @property
    def dim(self) -> int:
        return self.terms.shape[1]

    def scaled_terms(self) -> np.ndarray:
        return self.terms / self.prescale


def _neighbor(i: int, n: int) -> int:
    return 1 if i == n else i + 1


def _ising_layout(n: int) -> list[PauliTerm]:
    terms = [PauliTerm(n, ((i, "x"),)) for i in range(1, n + 1)]
    terms += [PauliTerm(n, ((i, "z"), (i + 1, "z"))) for i in range(1, n)]
    return terms


def _local1d_layout(n: int) -> list[PauliTerm]:
    terms = [
        PauliTerm(n, ((i, p),)) for i in range(1, n + 1) for p in "xyz"
    ]
    terms += [
        PauliTerm(n, ((i, p), (_neighbor(i, n), q)))
        for i in range(1, n + 1)
        for p in "xyz"
        for q in "xyz"
    ]
    return terms


def _term_label(term: PauliTerm) -> str:
    return "".join(f"{axis}{site}" for site, axis in term.factors)


def build_family(kind: str, n_qubits: int, seed: int) -> HamiltonianFamily:
    """Construct one of the named families with seeded normal weights.

    Weights are drawn one per term, in term-declaration order, from
    ``RandomStream(seed)``.
    """
    if n_qubits < 2:
        raise ValueError("families need at least 2 qubits")
    n = n_qubits
    if kind == "ising":
        layout = _ising_layout(n)
        labels = [_term_label(t) for t in layout]
        terms = np.stack([pauli_to_dense(t) for t in layout])
        prescale = 1.0
    elif kind == "local1d":
        layout = _local1d_layout(n)
        labels = [_term_label(t) for t in layout]
        terms = np.stack([pauli_to_dense(t) for t in layout])
        prescale = 1.0
    elif kind == "transversal1d":
        d = 2**n
        mats, labels = [], []
        for p in "xyz":
            acc = np.zeros((d, d), dtype=np.complex128)
            for i in range(1, n + 1):
                acc += pauli_to_dense(PauliTerm(n, ((i, p),)))
            mats.append(acc)
            labels.append(f"sum_{p}")
        for p in "xyz":
            for q in "xyz":
                acc = np.zeros((d, d), dtype=np.complex128)
                for i in range(1, n + 1):
                    acc += pauli_to_dense(
                        PauliTerm(n, ((i, p), (_neighbor(i, n), q)))
                    )
                mats.append(acc)
                labels.append(f"sum_{p}{q}")
        terms = np.stack(mats)
        prescale = float(n)
    else:
        raise ValueError(f"unknown family kind {kind!r}")
    stream = RandomStream(seed)
    weights = np.array(stream.normals(len(labels)))
    return HamiltonianFamily(
        kind=kind,
        n_qubits=n,
        labels=labels,
        terms=terms,
        weights=weights,
        prescale=prescale,
    )


@dataclass
class ObservableFamily:
    """PSD observables F_j with sum F_j <= I.

    ``n_base`` is the term count of the generating Hamiltonian family
    (excluding any completion operator); the parameter mapping between
    dual coordinates and physical weights uses it.
    """

    operators: np.ndarray  # (m, d, d) complex stack
    complete: bool
    n_base: int
    labels: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.operators.shape[0]

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @cached_property
    def _flat_conj(self) -> np.ndarray:
        # cached (m, d*d) view used by the moment evaluation hot loop
        return self.operators.reshape(len(self), -1).conj()

    def moments(self, state: np.ndarray) -> np.ndarray:
        """<F_j, state> for all j (real part; inputs Hermitian)."""
        return (self._flat_conj @ state.ravel()).real

    def assemble(self, lam: np.ndarray) -> np.ndarray:
        """sum_j lam_j F_j."""
        lam = np.asarray(lam, dtype=np.float64)
        if lam.shape != (len(self),):
            raise ValueError(
                f"expected {len(self)} coefficients, got shape {lam.shape}"
            )
        d = self.dim
        return (lam.astype(np.complex128) @ self.operators.reshape(len(self), -1)).reshape(d, d)


def normalize_family(fam: HamiltonianFamily) -> ObservableFamily:
    """Shift and scale terms into observables F_j = (I + H_j/prescale)/(2m)."""
    m = len(fam)
    scaled = fam.scaled_terms()
    for j in range(m):
        norm = float(np.abs(np.linalg.eigvalsh(scaled[j])).max())
        if norm > 1.0 + 1e-9:
            raise NormalizationError(
                f"term {fam.labels[j]!r} has norm {norm:.6f} > 1 after prescale"
            )
    eye = np.eye(fam.dim, dtype=np.complex128)
    operators = (eye[None, :, :] + scaled) / (2.0 * m)
    return ObservableFamily(
        operators=operators,
        complete=False,
        n_base=m,
        labels=list(fam.labels),
    )


def complete_family(obs: ObservableFamily) -> ObservableFamily:
    """Append the remainder operator so the family sums to the identity."""
    remainder = np.eye(obs.dim, dtype=np.complex128) - obs.operators.sum(axis=0)
    min_eig = float(np.linalg.eigvalsh(remainder)[0])
    if min_eig < -PSD_ATOL:
        raise ValueError(
            f"completion operator is not PSD (min eigenvalue {min_eig:.3e}); "
            "family sum already exceeds the identity"
        )
    operators = np.concatenate([obs.operators, remainder[None, :, :]])
    return ObservableFamily(
        operators=operators,
        complete=True,
        n_base=obs.n_base,
        labels=list(obs.labels) + ["completion"],
    )


@dataclass(frozen=True)
class GroundTruth:
    """Generating parameters of a synthetic instance."""

    mu: np.ndarray  # physical weights over the prescaled terms
    lambda_star: np.ndarray  # dual optimizer over the observable family
    dual_optimum: float


@dataclass
class ProblemInstance:
    """Target moments plus the observable family they were measured on."""

    observables: ObservableFamily
    alpha: np.ndarray
    beta: float
    ground_truth: GroundTruth | None = None
    label: str = ""

    @property
    def n_observables(self) -> int:
        return len(self.observables)


def _log_trace_exp(w: np.ndarray) -> float:
    wmax = float(w[-1])
    return wmax + float(np.log(np.exp(w - wmax).sum()))


def instance_from_weights(
    fam: HamiltonianFamily,
    mu: np.ndarray,
    beta: float = 1.0,
    complete: bool = False,
    label: str = "",
) -> ProblemInstance:
    """Build the exact moment-matching instance generated by weights mu.

    The physical Hamiltonian is ``sum_j mu_j (H_j / prescale)``; the
    target moments are those of its Gibbs state at inverse temperature
    ``beta``, taken over the normalized (optionally completed) family.
    The dual optimizer ``lambda* = -2 m beta mu`` (zero-padded on the
    completion coordinate) and the optimal dual value are recorded.
    """
    mu = np.asarray(mu, dtype=np.float64)
    m = len(fam)
    if mu.shape != (m,):
        raise ValueError(f"expected {m} weights, got shape {mu.shape}")
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    obs = normalize_family(fam)
    if complete:
        obs = complete_family(obs)

    h_phys = np.tensordot(mu, fam.scaled_terms(), axes=1)
    eig = eig_herm(h_phys)
    w = -beta * eig.eigenvalues
    if float(np.abs(w).max()) > 700.0:
        raise OverflowError("exp(-beta H) overflows for this beta")
    w_shift = np.exp(w - w.max())
    xi = (eig.basis * (w_shift / w_shift.sum())) @ eig.basis.conj().T

    alpha = obs.moments(xi)
    lambda_star = np.zeros(len(obs))
    lambda_star[:m] = -2.0 * m * beta * mu
    w_dual = np.linalg.eigvalsh(obs.assemble(lambda_star))
    dual_optimum = _log_trace_exp(w_dual) - float(lambda_star @ alpha)
    return ProblemInstance(
        observables=obs,
        alpha=alpha,
        beta=beta,
        ground_truth=GroundTruth(
            mu=mu, lambda_star=lambda_star, dual_optimum=dual_optimum
        ),
        label=label,
    )


def make_instance(
    fam: HamiltonianFamily,
    seed: int,
    beta: float = 1.0,
    complete: bool = False,
) -> ProblemInstance:
    """Draw a synthetic instance with seeded standard-normal coefficients.

    One coefficient per term is drawn in declaration order; the
    assembled Hamiltonian is divided by the qubit count (so the weights
    over the prescaled terms are ``c_j * prescale / n``), keeping the
    effective inverse temperature moderate for every family kind.
    """
    stream = RandomStream(seed)
    c = np.array(stream.normals(len(fam)))
    mu = c * fam.prescale / fam.n_qubits
    label = f"{fam.kind}-n{fam.n_qubits}-seed{seed}"
    if complete:
        label += "-complete"
    return instance_from_weights(
        fam, mu, beta=beta, complete=complete, label=label
    )


def recover_weights(instance: ProblemInstance, lam: np.ndarray) -> np.ndarray:
    """Map dual coordinates back to physical weights.

    For completed families the dual objective is flat along the all-ones
    direction (the family sums to the identity), so the completion
    coordinate fixes the gauge before the linear map is inverted.
    """
    lam = np.asarray(lam, dtype=np.float64)
    obs = instance.observables
    if lam.shape != (len(obs),):
        raise ValueError(f"expected {len(obs)} coordinates, got {lam.shape}")
    m = obs.n_base
    if obs.complete:
        lam_eff = lam[:m] - lam[m]
    else:
        lam_eff = lam[:m]
    return -lam_eff / (2.0 * m * instance.beta)
