"""Signal-state ensembles: the (delta, p) source model, Stokes-vector
diagnostics, the tetrahedron (non-coplanarity) check, and projection of
multi-photon sources onto their single-photon component.

Each party prepares four qubit states indexed canonically by
``(i, x) = (0,0), (0,1), (1,0), (1,1)``: ``i`` selects key (0) or test (1)
usage and ``x`` the bit/test value.  The key rate machinery downstream takes
Alice's and Bob's ensembles independently, so asymmetric sources and
per-state noise are supported throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySubspaceError, InvalidParamsError
from .qmath import PAULI, require_hermitian

TRACE_TOL = 1e-10
PSD_TOL = 1e-10
PROB_TOL = 1e-10

#: |det| of the probability-weighted Stokes matrix below which an ensemble
#: is classified as coplanar (tetrahedron check fails).
TETRAHEDRON_DET_TOL = 1e-9


@dataclass
class QubitState:
    """A 2x2 density matrix together with its send probability."""

    rho: np.ndarray
    prob: float
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        self.prob = float(self.prob)
        if not self.validate:
            return
        self.rho = require_hermitian(self.rho, name="rho")
        if self.rho.shape != (2, 2):
            raise InvalidParamsError(f"rho must be 2x2, got {self.rho.shape}")
        tr = float(self.rho.trace().real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidParamsError(f"rho has trace {tr}, expected 1")
        wmin = float(np.linalg.eigvalsh(self.rho)[0])
        if wmin < -PSD_TOL:
            raise InvalidParamsError(f"rho is not PSD (min eigenvalue {wmin:.3e})")
        if not (0.0 <= self.prob <= 1.0):
            raise InvalidParamsError(f"prob must be in [0, 1], got {self.prob}")

    def weighted(self) -> np.ndarray:
        """The probability-weighted matrix ``prob * rho``."""
        return self.prob * self.rho


@dataclass
class SignalEnsemble:
    """Four signal states in canonical (i, x) order with probabilities summing to 1."""

    states: tuple[QubitState, QubitState, QubitState, QubitState]
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.states = tuple(self.states)
        if len(self.states) != 4:
            raise InvalidParamsError(f"an ensemble has exactly 4 states, got {len(self.states)}")
        if self.validate:
            total = sum(s.prob for s in self.states)
            if abs(total - 1.0) > PROB_TOL:
                raise InvalidParamsError(f"send probabilities sum to {total}, expected 1")

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, k):
        return self.states[k]

    @property
    def priors(self) -> np.ndarray:
        return np.array([s.prob for s in self.states])

    def key_states(self) -> tuple[QubitState, QubitState]:
        """The two key-generation states, (i, x) = (0, 0) and (0, 1)."""
        return self.states[0], self.states[1]


@dataclass
class ModelParams:
    """Two-parameter source model: a constant modulation offset ``delta``
    (radians) applied to each target state, plus depolarizing noise of
    strength ``depol`` that shortens every Bloch vector to ``1 - depol``."""

    delta: float
    depol: float

    def __post_init__(self):
        self.delta = float(self.delta)
        self.depol = float(self.depol)
        if not math.isfinite(self.delta):
            raise InvalidParamsError("delta must be finite")
        if not (0.0 <= self.depol < 1.0):
            raise InvalidParamsError(f"depol must be in [0, 1), got {self.depol}")


def _model_kets(delta: float) -> list[np.ndarray]:
    # Targets are H, V, (H+V)/sqrt2, (H-iV)/sqrt2; each picks up its own
    # constant offset parametrized by delta.
    s, c = np.sin(delta / 2), np.cos(delta / 2)
    ket00 = np.array([1.0, 0.0], dtype=complex)
    ket01 = np.array([-s, c], dtype=complex)
    ket10 = np.array([np.cos((np.pi + delta) / 4), np.sin((np.pi + delta) / 4)], dtype=complex)
    ket11 = np.array(
        [np.cos((-np.pi + delta) / 4), 1j * np.sin((-np.pi + delta) / 4)], dtype=complex
    )
    return [ket00, ket01, ket10, ket11]


def model_states(params: ModelParams, priors=(0.25, 0.25, 0.25, 0.25)) -> SignalEnsemble:
    """Build the four-state ensemble of the (delta, p) source model.

    Each state is ``(1-p) |xi><xi| + p * I/2`` where ``|xi>`` is the
    delta-offset target ket; the maximally-mixed admixture keeps every state
    unit trace and shrinks its Bloch vector to length ``1 - p``.

    Parameters
    ----------
    params : ModelParams
    priors : four nonnegative reals summing to 1

    Returns
    -------
    SignalEnsemble in canonical (i, x) order.
    """
    priors = np.asarray(priors, dtype=float)
    if priors.shape != (4,):
        raise InvalidParamsError(f"priors must have length 4, got shape {priors.shape}")
    if np.any(priors < 0) or abs(priors.sum() - 1.0) > PROB_TOL:
        raise InvalidParamsError("priors must be nonnegative and sum to 1")
    p = params.depol
    states = []
    for ket, prior in zip(_model_kets(params.delta), priors):
        rho = (1.0 - p) * np.outer(ket, ket.conj()) + p * np.eye(2) / 2.0
        states.append(QubitState(rho=rho, prob=float(prior)))
    return SignalEnsemble(states=tuple(states))


def stokes(state: QubitState) -> np.ndarray:
    """Probability-weighted Stokes vector ``P_r = prob * Tr(sigma_r rho)``.

    ``P_0`` equals the send probability; ``(P_1, P_2, P_3)`` is the Bloch
    vector scaled by it.  H is the +Z pole, so ``|H><H|`` with probability 1
    maps to ``(1, 0, 0, 1)``.
    """
    return np.array([state.prob * float(np.trace(s @ state.rho).real) for s in PAULI])


@dataclass
class TetrahedronDiagnostics:
    """Result of the non-coplanarity check on an ensemble."""

    determinant: float
    cond: float
    passed: bool
    stokes_matrix: np.ndarray


def tetrahedron_check(ensemble: SignalEnsemble) -> TetrahedronDiagnostics:
    """Check that the four weighted Stokes vectors are linearly independent.

    Independence (the states' Bloch vectors not all falling in one plane,
    with nonzero priors) is exactly what makes the 16x16 state matrix built
    downstream invertible, so the reported condition number forecasts how
    well detection statistics can be inverted.
    """
    S = np.vstack([stokes(s) for s in ensemble.states])
    det = float(np.linalg.det(S))
    cond = float(np.linalg.cond(S))
    return TetrahedronDiagnostics(
        determinant=det,
        cond=cond,
        passed=abs(det) > TETRAHEDRON_DET_TOL,
        stokes_matrix=S,
    )


def single_photon_project(
    two_mode_state,
    mu: float,
    normalize: str = "poisson",
    prob: float = 1.0,
) -> QubitState:
    """Extract the single-photon polarization qubit from a two-mode state.

    The input is a density matrix on a two-mode Fock space
    ``H (x) V`` with equal per-mode truncation ``d`` (shape ``(d*d, d*d)``,
    basis index ``d*n_H + n_V``).  The state is projected onto
    ``span{|1,0>, |0,1>}`` and divided either by the single-photon Poisson
    weight ``exp(-mu) * mu`` (``normalize="poisson"``) or by the projected
    trace (``normalize="trace"``), the latter being appropriate for sources
    that are not exactly Poissonian.

    The returned qubit uses ``|H> = |1,0>``, ``|V> = |0,1>``.
    """
    M = require_hermitian(two_mode_state, name="two_mode_state")
    d = int(round(np.sqrt(M.shape[0])))
    if d * d != M.shape[0] or d < 2:
        raise InvalidParamsError(
            f"two_mode_state must act on d^2-dimensional space with d >= 2, got {M.shape[0]}"
        )
    if normalize not in ("poisson", "trace"):
        raise InvalidParamsError(f"normalize must be 'poisson' or 'trace', got {normalize!r}")
    if normalize == "poisson" and not mu > 0:
        raise InvalidParamsError(f"mu must be positive, got {mu}")
    idx = [d, 1]  # |1,0> (single photon in H) then |0,1>
    block = M[np.ix_(idx, idx)]
    weight = float(block.trace().real)
    if weight < 1e-12:
        raise EmptySubspaceError(f"single-photon subspace weight {weight:.3e} is below 1e-12")
    divisor = math.exp(-mu) * mu if normalize == "poisson" else weight
    return QubitState(rho=block / divisor, prob=prob)


def phase_randomized_coherent(jones, mu: float, n_max: int = 4) -> np.ndarray:
    """Two-mode phase-randomized coherent state, truncated at ``n_max`` photons.

    ``jones = (a_H, a_V)`` sets the polarization (it is normalized
    internally) and ``mu`` the mean photon number.  The result is a Poisson
    mixture over total photon number of pure n-photon states of that
    polarization, expressed in the Fock basis ``|n_H> (x) |n_V>`` with
    per-mode dimension ``n_max + 1``.  Photon numbers above ``n_max`` are
    dropped, so the matrix is subnormalized by the Poisson tail; every kept
    block, including the single-photon one, is exact.
    """
    if not mu > 0:
        raise InvalidParamsError(f"mu must be positive, got {mu}")
    a = np.asarray(jones, dtype=complex)
    if a.shape != (2,):
        raise InvalidParamsError("jones must be a length-2 amplitude pair")
    norm = np.linalg.norm(a)
    if norm == 0:
        raise InvalidParamsError("jones vector must be nonzero")
    a = a / norm
    d = n_max + 1
    rho = np.zeros((d * d, d * d), dtype=complex)
    for n in range(n_max + 1):
        ket = np.zeros(d * d, dtype=complex)
        for k in range(n + 1):
            amp = math.sqrt(math.comb(n, k)) * a[0] ** k * a[1] ** (n - k)
            ket[d * k + (n - k)] = amp
        weight = math.exp(-mu) * mu**n / math.factorial(n)
        rho += weight * np.outer(ket, ket.conj())
    return rho


def ensemble_to_json(ensemble: SignalEnsemble) -> str:
    """Serialize an ensemble to JSON.

    Schema: ``{"priors": [p0, p1, p2, p3], "rhos": [rho0, ..., rho3]}`` with
    each ``rho`` a 2x2 row-major nested list whose entries are ``[re, im]``
    pairs.
    """
    doc = {
        "priors": [s.prob for s in ensemble.states],
        "rhos": [
            [[[float(e.real), float(e.imag)] for e in row] for row in s.rho]
            for s in ensemble.states
        ],
    }
    return json.dumps(doc, indent=2)


def ensemble_from_json(text: str) -> SignalEnsemble:
    """Inverse of :func:`ensemble_to_json`; validates the resulting states."""
    doc = json.loads(text)
    return ensemble_from_dict(doc)


def ensemble_from_dict(doc: dict) -> SignalEnsemble:
    """Build an ensemble from the parsed JSON document form."""
    try:
        priors = doc["priors"]
        rhos = doc["rhos"]
    except (KeyError, TypeError) as exc:
        raise InvalidParamsError(f"ensemble document missing field: {exc}") from exc
    if len(priors) != 4 or len(rhos) != 4:
        raise InvalidParamsError("ensemble document must list 4 priors and 4 states")
    states = []
    for prior, rho in zip(priors, rhos):
        mat = np.array([[complex(e[0], e[1]) for e in row] for row in rho])
        states.append(QubitState(rho=mat, prob=float(prior)))
    return SignalEnsemble(states=tuple(states))
