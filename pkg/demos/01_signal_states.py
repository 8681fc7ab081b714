"""Tour of the signal-state model: build the four-state ensembles, inspect
their Bloch/Stokes structure, and run the non-coplanarity diagnostics that
decide whether detection statistics can be inverted at all.
"""

import numpy as np

from twistqkd import (
    ModelParams,
    ensemble_to_json,
    model_states,
    stokes,
    tetrahedron_check,
)

np.set_printoptions(precision=4, suppress=True)

# ---------------------------------------------------------------------------
# An ideal source prepares H, V, diagonal, and circular polarization.
# ---------------------------------------------------------------------------
ideal = model_states(ModelParams(delta=0.0, depol=0.0))
print("ideal states (delta=0, p=0):")
for label, state in zip(("H", "V", "D", "R"), ideal.states):
    print(f"  {label}: prob={state.prob}  rho=\n{state.rho}")

# ---------------------------------------------------------------------------
# A realistic source has a per-state modulation offset delta and shortened
# Bloch vectors from depolarizing noise p.
# ---------------------------------------------------------------------------
noisy = model_states(ModelParams(delta=0.1, depol=0.05))
print("\nnoisy source (delta=0.1 rad, p=0.05):")
for k, state in enumerate(noisy.states):
    P = stokes(state)
    bloch_len = np.linalg.norm(P[1:]) / P[0]
    print(f"  state {k}: Stokes={P}, Bloch length={bloch_len:.4f}  (expect 1-p=0.95)")

# ---------------------------------------------------------------------------
# The four weighted Stokes vectors must be linearly independent ("the states
# form a tetrahedron"): that is exactly invertibility of the 16x16 state
# matrix used later to reconstruct the measurement node's Gram matrix.
# ---------------------------------------------------------------------------
diag = tetrahedron_check(noisy)
print("\ntetrahedron diagnostics (noisy source):")
print(f"  |det| = {abs(diag.determinant):.6g}   cond = {diag.cond:.4g}   passed = {diag.passed}")

# a coplanar counterexample: replace circular with antidiagonal polarization
from twistqkd import QubitState, SignalEnsemble

ket_a = np.array([1.0, -1.0]) / np.sqrt(2.0)
coplanar = SignalEnsemble(
    states=(
        ideal[0],
        ideal[1],
        ideal[2],
        QubitState(rho=np.outer(ket_a, ket_a.conj()), prob=0.25),
    )
)
diag = tetrahedron_check(coplanar)
print("\nreplacing R by A (all states in the X-Z plane):")
print(f"  |det| = {abs(diag.determinant):.3g}   passed = {diag.passed}   <- unusable source")

# ---------------------------------------------------------------------------
# Ensembles serialize to a small JSON document (see README for the schema).
# ---------------------------------------------------------------------------
print("\nJSON form of the ideal ensemble (truncated):")
print(ensemble_to_json(ideal)[:200], "...")
