"""Phase-error optimization over virtual purifications of the key states.

Mixed key-generation states admit many purifications, all related by
unitary "twisting" operations on the purifying ancillas.  The twist never
changes observable statistics, but it does change the phase error rates of
the virtual qubits, so it can be optimized after the fact.  The two
objectives

    e_minus = e_X - e_Y   (maximized)
    e_plus  = e_X + e_Y   (minimized)

are linear in the Gram matrix of the twisted ancilla vectors, whose
diagonal blocks are fixed by the key states themselves.  That makes each
optimization a small semidefinite program over an 8x8 PSD Gram variable
(one 4-vector block per relevant key-state pair), solved here through the
real-symmetric embedding and the dense interior-point solver in
:mod:`twistqkd.sdp`.

Gram storage convention (matching :class:`twistqkd.evegram.EveGram`): entry
``[2m+n, 2m'+n']`` of a block holds the inner product of the ``(m', n')``
vector with the ``(m, n)`` one, so a diagonal block for key pair (x, y)
equals ``p^x q^y * kron(rho_A^x, sigma_B^y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidParamsError,
    NumericalTroubleError,
    SdpInfeasibleError,
)
from .evegram import EveGram
from .qmath import eig2_hermitian, kron, real_embed_hermitian, require_hermitian
from .sdp import SdpProblem, SdpSolution, solve_sdp
from .states import QubitState

#: Relative eigenvalue cutoff below which a pinned Gram block is treated as
#: rank deficient and the SDP variable is restricted to its support.
RANK_TOL = 1e-12

_KEY_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


def ancilla_gram_block(alice_state: QubitState, bob_state: QubitState) -> np.ndarray:
    """Fixed 4x4 Gram block of the ancilla vectors for one key-state pair."""
    return alice_state.prob * bob_state.prob * kron(alice_state.rho, bob_state.rho)


@dataclass
class TwistProblem:
    """Inputs of the two phase-error SDPs for one parameter point.

    ``blocks`` maps each key bit pair (x, y) to its weighted ancilla Gram
    block; the pair ((0,1), (1,0)) feeds the e_minus program and
    ((0,0), (1,1)) the e_plus one.
    """

    blocks: dict
    eve_gram: EveGram
    p_det00: float
    e_z: float

    def __post_init__(self):
        if self.p_det00 <= 0:
            raise InvalidParamsError(f"p_det00 must be positive, got {self.p_det00}")
        if not (-1e-12 <= self.e_z <= 1 + 1e-12):
            raise InvalidParamsError(f"e_z must be in [0, 1], got {self.e_z}")
        self.e_z = min(max(self.e_z, 0.0), 1.0)
        for pair in _KEY_PAIRS:
            if pair not in self.blocks:
                raise InvalidParamsError(f"missing ancilla Gram block for key pair {pair}")
            W = require_hermitian(self.blocks[pair], tol=1e-10, name=f"block {pair}")
            wmin = float(np.linalg.eigvalsh(W)[0])
            if wmin < -1e-10:
                raise InvalidParamsError(f"ancilla Gram block {pair} is not PSD")
            self.blocks[pair] = W

    @classmethod
    def from_key_states(cls, alice_key, bob_key, eve: EveGram, p_det00: float, e_z: float):
        """Assemble the problem from each party's two key-generation states."""
        blocks = {
            (x, y): ancilla_gram_block(alice_key[x], bob_key[y])
            for x in (0, 1)
            for y in (0, 1)
        }
        return cls(blocks=blocks, eve_gram=eve, p_det00=p_det00, e_z=e_z)


@dataclass
class PhaseErrors:
    """Phase error rates; ``e_x``/``e_y`` are recovered as
    ``(e_plus +/- e_minus) / 2``."""

    e_minus: float
    e_plus: float
    e_x: float
    e_y: float
    status_minus: str = field(default="", repr=False)
    status_plus: str = field(default="", repr=False)


def _reduce_block(W: np.ndarray, label: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-basis of the numerical support of a PSD block.

    Returns ``(lam, V)`` with ``lam`` the kept (positive) eigenvalues and
    ``V`` the matching orthonormal columns.  Restricting the Gram variable
    to this support is exact: any PSD matrix with a rank-deficient pinned
    diagonal block vanishes outside the block's range, and without the
    restriction the interior-point method would have no strictly feasible
    point at exact purity.
    """
    w, V = np.linalg.eigh(W)
    wmax = float(w[-1])
    if wmax <= 0.0:
        raise InvalidParamsError(f"ancilla Gram block {label} is zero; check key-state priors")
    keep = w > RANK_TOL * wmax
    return w[keep].copy(), V[:, keep].copy()


def _elem(dim: int, a: int, b: int) -> np.ndarray:
    E = np.zeros((dim, dim))
    E[a, b] += 0.5
    E[b, a] += 0.5
    return E


def _build_twist_sdp(
    W_left: np.ndarray,
    W_right: np.ndarray,
    eve4: np.ndarray,
    p_det00: float,
    lo: float,
    hi: float,
    affine: float,
    sense: str,
) -> SdpProblem:
    """Common builder for the two programs.

    The objective value of the produced SDP equals ``e - affine`` where
    ``e = affine - (2/p_det00) * sum Re(E[a,b] * G[a, r1+b])`` over the
    off-diagonal block of the (support-reduced) Gram variable ``G``; the
    scalar bounds ``lo <= e <= hi`` enter as two linear inequalities.
    """
    lam1, V1 = _reduce_block(W_left, "left")
    lam2, V2 = _reduce_block(W_right, "right")
    r1, r2 = len(lam1), len(lam2)
    nc = r1 + r2

    # Pairing matrix in the reduced basis, then the Hermitian coefficient
    # matrix Phi with Tr(Phi G) = sum Re(Ehat[c,d] G[c, r1+d]).
    Ehat = V1.T @ eve4 @ V2.conj()
    Phi = np.zeros((nc, nc), dtype=complex)
    Phi[:r1, r1:] = Ehat.conj() / 2.0
    Phi[r1:, :r1] = Ehat.T / 2.0
    scale = -2.0 / p_det00
    C = (scale / 2.0) * real_embed_hermitian(Phi)

    equalities = []
    dim = 2 * nc
    # Tie the two copies of the real embedding together so the solution is a
    # valid Hermitian matrix: Y = [[P, -Q], [Q, P]] with P symmetric and Q
    # antisymmetric.
    for a in range(nc):
        for b in range(a, nc):
            equalities.append((_elem(dim, a, b) - _elem(dim, nc + a, nc + b), 0.0))
            if a == b:
                equalities.append((_elem(dim, nc + a, a), 0.0))
            else:
                equalities.append((_elem(dim, nc + a, b) + _elem(dim, nc + b, a), 0.0))
    # Pin the diagonal blocks (diagonal in the reduced eigenbasis).
    for off, lam in ((0, lam1), (r1, lam2)):
        for c in range(len(lam)):
            for d in range(c, len(lam)):
                value = float(lam[c]) if c == d else 0.0
                equalities.append((_elem(dim, off + c, off + d), value))
                if c != d:
                    equalities.append((_elem(dim, nc + off + c, off + d), 0.0))

    inequalities = [(-C, affine - lo), (C, hi - affine)]
    return SdpProblem(
        dim=dim,
        objective=C,
        equalities=equalities,
        inequalities=inequalities,
        sense=sense,
    )


def build_eminus_problem(
    alice_key, bob_key, eve: EveGram, p_det00: float, e_z: float
) -> SdpProblem:
    """SDP maximizing ``e_minus`` over twisted purifications.

    The Gram variable covers the ancilla vectors of the mismatched key
    pairs (0,1) and (1,0); the optimal objective value is ``e_minus``
    itself, constrained to ``[0, e_z]``.
    """
    W01 = ancilla_gram_block(alice_key[0], bob_key[1])
    W10 = ancilla_gram_block(alice_key[1], bob_key[0])
    return _build_twist_sdp(
        W01, W10, eve.e_matrix, p_det00, lo=0.0, hi=e_z, affine=0.0, sense="max"
    )


def build_eplus_problem(
    alice_key, bob_key, eve: EveGram, p_det00: float, e_z: float
) -> SdpProblem:
    """SDP minimizing ``e_plus`` over twisted purifications.

    The Gram variable covers the matched key pairs (0,0) and (1,1).  The
    objective carries the affine offset outside the SDP: the optimal
    objective value equals ``e_plus - 1``, with ``e_plus`` constrained to
    ``[e_z, 1]``.
    """
    W00 = ancilla_gram_block(alice_key[0], bob_key[0])
    W11 = ancilla_gram_block(alice_key[1], bob_key[1])
    return _build_twist_sdp(
        W00, W11, eve.e_matrix, p_det00, lo=e_z, hi=1.0, affine=1.0, sense="min"
    )


def _require_solved(sol: SdpSolution, label: str) -> None:
    if sol.status == "infeasible":
        raise SdpInfeasibleError(f"{label} program infeasible: {sol.message}")
    if sol.status != "optimal":
        raise NumericalTroubleError(
            f"{label} program did not converge: {sol.message} "
            f"(gap {sol.duality_gap:.2e}, residuals {sol.primal_residual:.2e}/"
            f"{sol.dual_residual:.2e})"
        )


def optimize_phase_errors(
    problem: TwistProblem, tol: float = 1e-8, max_iters: int = 200
) -> PhaseErrors:
    """Solve both phase-error SDPs and return the optimized rates.

    The two programs are independent; results are clipped to their scalar
    constraint intervals to remove solver-tolerance dust.
    """
    E = problem.eve_gram.e_matrix
    prob_minus = _build_twist_sdp(
        problem.blocks[(0, 1)],
        problem.blocks[(1, 0)],
        E,
        problem.p_det00,
        lo=0.0,
        hi=problem.e_z,
        affine=0.0,
        sense="max",
    )
    prob_plus = _build_twist_sdp(
        problem.blocks[(0, 0)],
        problem.blocks[(1, 1)],
        E,
        problem.p_det00,
        lo=problem.e_z,
        hi=1.0,
        affine=1.0,
        sense="min",
    )
    sol_minus = solve_sdp(prob_minus, tol=tol, max_iters=max_iters)
    _require_solved(sol_minus, "e_minus")
    sol_plus = solve_sdp(prob_plus, tol=tol, max_iters=max_iters)
    _require_solved(sol_plus, "e_plus")

    e_minus = min(max(sol_minus.objective_value, 0.0), problem.e_z)
    e_plus = min(max(1.0 + sol_plus.objective_value, problem.e_z), 1.0)
    return PhaseErrors(
        e_minus=e_minus,
        e_plus=e_plus,
        e_x=(e_plus + e_minus) / 2.0,
        e_y=(e_plus - e_minus) / 2.0,
        status_minus=sol_minus.status,
        status_plus=sol_plus.status,
    )


def _purification_vectors(alice_state: QubitState, bob_state: QubitState) -> np.ndarray:
    """Explicit ancilla vectors of the eigenbasis purification.

    Row ``2m+n`` holds the ancilla vector attached to ``|m, n>``, expanded
    over the ancilla basis ``|k, k'>`` that indexes both parties'
    eigenvalues in decreasing order:

        Gamma[2m+n, 2k+k'] = sqrt(p q) sqrt(lam_k mu_k') v_k[m] w_k'[n]
    """
    wA, VA = eig2_hermitian(alice_state.rho)
    wB, VB = eig2_hermitian(bob_state.rho)
    wA = np.sqrt(np.clip(wA, 0.0, None))
    wB = np.sqrt(np.clip(wB, 0.0, None))
    scale = np.sqrt(alice_state.prob * bob_state.prob)
    G = scale * np.einsum("k,p,mk,np->mnkp", wA, wB, VA, VB)
    return G.reshape(4, 4)


def naive_twist_gram(alice_key, bob_key, pair: str = "plus") -> np.ndarray:
    """8x8 Gram of the stacked untwisted purification vectors.

    Stored in the same convention as the SDP variable (entry ``[u, v]`` is
    the inner product of vector v with vector u), so it is a feasible point
    of the corresponding program: PSD with the pinned diagonal blocks.
    """
    if pair == "plus":
        combos = ((0, 0), (1, 1))
    elif pair == "minus":
        combos = ((0, 1), (1, 0))
    else:
        raise InvalidParamsError(f"pair must be 'plus' or 'minus', got {pair!r}")
    S = np.vstack([_purification_vectors(alice_key[x], bob_key[y]) for x, y in combos])
    return S @ S.conj().T


def naive_phase_errors(alice_key, bob_key, eve: EveGram, p_det00: float) -> PhaseErrors:
    """Phase errors of the fixed eigenbasis purification (no twist).

    This is the baseline the optimization is compared against.  Note that
    ``e_minus`` is the signed difference ``e_X - e_Y`` and can be negative
    here; the key rate formula is even in it.
    """
    G00 = _purification_vectors(alice_key[0], bob_key[0])
    G11 = _purification_vectors(alice_key[1], bob_key[1])
    G01 = _purification_vectors(alice_key[0], bob_key[1])
    G10 = _purification_vectors(alice_key[1], bob_key[0])
    E = eve.e_matrix
    s_plus = float(np.real(np.sum(E * (G00 @ G11.conj().T))))
    s_minus = float(np.real(np.sum(E * (G01 @ G10.conj().T))))
    e_plus = 1.0 - 2.0 * s_plus / p_det00
    e_minus = -2.0 * s_minus / p_det00
    return PhaseErrors(
        e_minus=e_minus,
        e_plus=e_plus,
        e_x=(e_plus + e_minus) / 2.0,
        e_y=(e_plus - e_minus) / 2.0,
    )
