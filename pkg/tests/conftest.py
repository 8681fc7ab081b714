"""Shared helpers for building random and degenerate test ensembles."""

import numpy as np

from twistqkd.qmath import PAULI
from twistqkd.states import QubitState, SignalEnsemble


def bloch_state(r, prob):
    """Qubit state with Bloch vector ``r`` (length <= 1)."""
    r = np.asarray(r, dtype=float)
    rho = 0.5 * (PAULI[0] + r[0] * PAULI[1] + r[1] * PAULI[2] + r[2] * PAULI[3])
    return QubitState(rho=rho, prob=prob)


def random_priors(rng):
    """Priors bounded away from zero so the ensembles stay well conditioned."""
    raw = rng.dirichlet(np.ones(4) * 4.0)
    return 0.5 * raw + 0.5 * 0.25


def random_ensemble(rng):
    """Generic random ensemble; tetrahedral with overwhelming probability."""
    priors = random_priors(rng)
    states = []
    for k in range(4):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        length = rng.uniform(0.2, 0.95)
        states.append(bloch_state(length * direction, priors[k]))
    return SignalEnsemble(states=tuple(states))


def coplanar_ensemble(rng):
    """Ensemble whose four Bloch vectors lie in one (affine) plane, which
    makes the weighted Stokes vectors linearly dependent."""
    priors = random_priors(rng)
    basis = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    u, v, w = basis.T
    center = rng.uniform(-0.2, 0.2) * w
    states = []
    for k in range(4):
        r = center + rng.uniform(-0.6, 0.6) * u + rng.uniform(-0.6, 0.6) * v
        norm = np.linalg.norm(r)
        if norm > 0.95:
            r *= 0.95 / norm
        states.append(bloch_state(r, priors[k]))
    return SignalEnsemble(states=tuple(states))


def sampled_twist_values(alice_key, bob_key, eve, p00, n_samples, seed):
    """Oracle: evaluate both phase-error objectives at randomly sampled
    twisting unitaries acting on the explicit purification ancillas."""
    from twistqkd.twist import _purification_vectors

    rng = np.random.default_rng(seed)

    def haar(n_batch, dim=4):
        g = rng.normal(size=(n_batch, dim, dim)) + 1j * rng.normal(size=(n_batch, dim, dim))
        q, r = np.linalg.qr(g)
        phases = np.diagonal(r, axis1=1, axis2=2).copy()
        phases /= np.abs(phases)
        return q * phases[:, None, :]

    def values(block1, block2):
        g1 = _purification_vectors(alice_key[block1[0]], bob_key[block1[1]])
        g2 = _purification_vectors(alice_key[block2[0]], bob_key[block2[1]])
        # effective twist U = U2^dag U1 on the shared ancilla space
        U = np.einsum("nba,nbc->nac", haar(n_samples).conj(), haar(n_samples))
        cross = np.einsum("ad,ncd,bc->nab", g1, U, g2.conj())
        return np.real(np.einsum("ab,nab->n", eve.e_matrix, cross))

    e_minus_samples = -2.0 / p00 * values((0, 1), (1, 0))
    e_plus_samples = 1.0 - 2.0 / p00 * values((0, 0), (1, 1))
    return e_minus_samples, e_plus_samples


def random_density_matrix(rng, dim=2):
    """Random full-rank density matrix (Ginibre construction)."""
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim):
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (G + G.conj().T)
