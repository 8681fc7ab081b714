"""Reconstruction of the eavesdropper's Gram matrix from detection statistics.

The 16 pass probabilities are linear in the 16 inner products
``<e_{m'n'}|e_{mn}>`` of the (subnormalized) post-announcement states held
by the measurement node, with the coefficient matrix built from the signal
states.  Solving that linear system, symmetrizing and clipping tiny negative
eigenvalues yields a physical 4x4 Gram matrix.

Storage convention: ``e_matrix[2m+n, 2m'+n'] = <e_{m'n'}|e_{mn}>``, i.e. the
flattened entry ``s = 8m + 4m' + 2n + n'`` lands at row ``2m+n``, column
``2m'+n'``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import DetectionStats, GammaMatrix, stats_index
from .errors import NoDetectionsError, SingularGammaError, UnphysicalStatsError
from .qmath import psd_project, solve_linear

COND_LIMIT = 1e9
CLIP_WARN = 1e-8
CLIP_ERROR = 1e-4


@dataclass
class EveGram:
    """4x4 Hermitian PSD Gram matrix of the node's post-pass states.

    ``clipped_mass`` records how much negative eigenvalue mass the PSD
    repair removed; ``raw`` keeps the unrepaired length-16 solution vector
    for auditing.
    """

    e_matrix: np.ndarray
    clipped_mass: float
    raw: np.ndarray

    def to_json(self) -> str:
        """JSON form with separate real/imaginary entry arrays."""
        doc = {
            "real": [[float(v) for v in row] for row in self.e_matrix.real],
            "imag": [[float(v) for v in row] for row in self.e_matrix.imag],
            "clipped_mass": self.clipped_mass,
        }
        return json.dumps(doc, indent=2)


def _vector_to_matrix(e_vec: np.ndarray) -> np.ndarray:
    E = np.zeros((4, 4), dtype=complex)
    for m in range(2):
        for mp in range(2):
            for n in range(2):
                for np_ in range(2):
                    E[2 * m + n, 2 * mp + np_] = e_vec[8 * m + 4 * mp + 2 * n + np_]
    return E


def _matrix_to_vector(E: np.ndarray) -> np.ndarray:
    v = np.zeros(16, dtype=complex)
    for m in range(2):
        for mp in range(2):
            for n in range(2):
                for np_ in range(2):
                    v[8 * m + 4 * mp + 2 * n + np_] = E[2 * m + n, 2 * mp + np_]
    return v


def solve_eve(gamma: GammaMatrix, stats: DetectionStats) -> EveGram:
    """Recover the Gram matrix by solving the statistics linear system.

    A linear solve is used rather than explicit inversion.  The result is
    symmetrized to ``(E + E^dag)/2`` and repaired to PSD by clipping
    negative eigenvalues; a repair above 1e-8 raises a warning and above
    1e-4 the statistics are rejected as inconsistent with any quantum
    channel under this package's conventions.
    """
    if not np.isfinite(gamma.cond) or gamma.cond >= COND_LIMIT:
        raise SingularGammaError(
            f"state matrix condition number {gamma.cond:.3e} exceeds {COND_LIMIT:.0e}; "
            "check that both ensembles pass the tetrahedron condition"
        )
    result = solve_linear(gamma.gamma, stats.p_det.astype(complex), cond_limit=COND_LIMIT)
    E = _vector_to_matrix(result.x)
    E = 0.5 * (E + E.conj().T)
    E_psd, clipped = psd_project(E, tol=1e-10)
    if clipped > CLIP_ERROR:
        raise UnphysicalStatsError(
            f"PSD repair removed eigenvalue mass {clipped:.3e} (> {CLIP_ERROR:.0e}); "
            "statistics are not consistent with any quantum channel"
        )
    if clipped > CLIP_WARN:
        warnings.warn(
            f"Gram reconstruction clipped eigenvalue mass {clipped:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return EveGram(e_matrix=E_psd, clipped_mass=clipped, raw=result.x)


def key_basis_stats(stats: DetectionStats) -> tuple[float, float]:
    """Key-basis detection probability and bit error rate.

    ``p_det00`` sums the four (i, j) = (0, 0) entries; the bit error rate is
    the mismatch fraction ``(p[0,0,0,1] + p[0,0,1,0]) / p_det00``.
    """
    keys = [stats_index(0, 0, x, y) for x in (0, 1) for y in (0, 1)]
    p00 = float(stats.p_det[keys].sum())
    if p00 < 1e-300:
        raise NoDetectionsError("key-basis detection probability is zero")
    mismatch = stats.p_det[stats_index(0, 0, 0, 1)] + stats.p_det[stats_index(0, 0, 1, 0)]
    return p00, float(mismatch / p00)
