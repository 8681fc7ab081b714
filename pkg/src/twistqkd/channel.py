"""Honest measurement-node model and detection statistics.

The central node projects the incoming pair onto the Bell state
``|Phi+> = (|HH> + |VV>)/sqrt(2)`` and announces pass/fail.  Photons reach
it through lossy fiber (identical length on both sides) and imperfect
detectors with dark counts.  This module produces the 16-entry vector of
pass probabilities and the 16x16 matrix of vectorized weighted signal
states whose inversion recovers the eavesdropper's Gram matrix.

Index maps, fixed once:

* statistics row ``t = 4*(2i + x) + (2j + y)`` over Alice's choice (i, x)
  and Bob's (j, y);
* state-matrix column ``s = 8m + 4m' + 2n + n'`` over the basis labels of
  ``|m,n><m',n'|`` (H=0, V=1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParamsError
from .qmath import kron, vec_rowmajor
from .states import SignalEnsemble

PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)
PHI_PLUS_PROJ = np.outer(PHI_PLUS, PHI_PLUS.conj())


@dataclass
class ChannelParams:
    """Loss and detector parameters of the honest channel.

    ``eta`` is the overall detection efficiency, ``p_dark`` the dark count
    probability per detector per pulse, ``distance_km`` the distance from
    each sender to the measurement node.  The per-photon survival factor is
    ``eta * 10**(-atten_db_per_km * distance_km / atten_divisor)``; the
    divisor is configurable (default 20).
    """

    eta: float
    p_dark: float
    distance_km: float
    atten_db_per_km: float = 0.2
    atten_divisor: float = 20.0

    def __post_init__(self):
        for name in ("eta", "p_dark", "distance_km", "atten_db_per_km", "atten_divisor"):
            value = float(getattr(self, name))
            setattr(self, name, value)
            if not math.isfinite(value):
                raise InvalidParamsError(f"{name} must be finite, got {value}")
        if not (0.0 < self.eta <= 1.0):
            raise InvalidParamsError(f"eta must be in (0, 1], got {self.eta}")
        if not (0.0 <= self.p_dark < 1.0):
            raise InvalidParamsError(f"p_dark must be in [0, 1), got {self.p_dark}")
        if self.distance_km < 0:
            raise InvalidParamsError(f"distance_km must be >= 0, got {self.distance_km}")
        if self.atten_divisor <= 0:
            raise InvalidParamsError(f"atten_divisor must be > 0, got {self.atten_divisor}")


def stats_index(i: int, j: int, x: int, y: int) -> int:
    """Row index t = 4*(2i+x) + (2j+y) of the statistics vector."""
    return 4 * (2 * i + x) + (2 * j + y)


@dataclass
class DetectionStats:
    """Length-16 vector of pass probabilities, indexed by :func:`stats_index`."""

    p_det: np.ndarray
    validate: bool = True

    def __post_init__(self):
        self.p_det = np.asarray(self.p_det, dtype=float)
        if self.p_det.shape != (16,):
            raise InvalidParamsError(f"p_det must have shape (16,), got {self.p_det.shape}")
        if self.validate:
            if np.any(self.p_det < -1e-15) or np.any(self.p_det > 1.0 + 1e-12):
                raise InvalidParamsError("p_det entries must lie in [0, 1]")
            if self.p_det.sum() > 1.0 + 1e-9:
                raise InvalidParamsError("p_det entries sum above 1")

    def __getitem__(self, t):
        return self.p_det[t]

    def to_csv(self, path) -> None:
        """Write rows ``i,j,x,y,p_det`` (with header) for all 16 settings."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "x", "y", "p_det"])
            for i in range(2):
                for j in range(2):
                    for x in range(2):
                        for y in range(2):
                            writer.writerow([i, j, x, y, f"{self.p_det[stats_index(i, j, x, y)]:.12g}"])

    @classmethod
    def from_csv(cls, path) -> "DetectionStats":
        """Read measured statistics from a CSV with columns i,j,x,y,p_det."""
        p = np.full(16, np.nan)
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                try:
                    i, j, x, y = (int(row[k]) for k in ("i", "j", "x", "y"))
                    value = float(row["p_det"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise InvalidParamsError(f"bad stats row {row}: {exc}") from exc
                if not all(v in (0, 1) for v in (i, j, x, y)):
                    raise InvalidParamsError(f"indices must be 0/1, got {(i, j, x, y)}")
                p[stats_index(i, j, x, y)] = value
        if np.any(np.isnan(p)):
            missing = int(np.sum(np.isnan(p)))
            raise InvalidParamsError(f"stats CSV is missing {missing} of the 16 settings")
        return cls(p_det=p)


@dataclass
class GammaMatrix:
    """16x16 matrix whose row t is ``vec(p rho)^T (x) vec(q sigma)^T``."""

    gamma: np.ndarray
    cond: float


def bell_pass_prob(rho, sigma) -> float:
    """Probability ``Tr[(rho (x) sigma) |Phi+><Phi+|]`` that both-photon
    arrivals pass the Bell projection."""
    joint = kron(np.asarray(rho, dtype=complex), np.asarray(sigma, dtype=complex))
    return float(np.trace(joint @ PHI_PLUS_PROJ).real)


def photon_loss(params: ChannelParams) -> float:
    """Per-photon loss probability ``1 - eta * 10**(-a*l/divisor)``."""
    trans = params.eta * 10.0 ** (-params.atten_db_per_km * params.distance_km / params.atten_divisor)
    return 1.0 - trans


def detection_stats(
    alice: SignalEnsemble, bob: SignalEnsemble, params: ChannelParams
) -> DetectionStats:
    """Simulated pass probabilities for all 16 state pairs.

    With per-photon loss p0 and dark count probability pd per detector,

    ``p_det = (1-p0)^2 (1-pd)^2 p_pass
              + 2 p q [p0^2 pd^2 (1-pd)^2 + p0 (1-p0) pd (1-pd)^2]``

    where ``p_pass = p q Tr[(rho (x) sigma)|Phi+><Phi+|]``.
    """
    p0 = photon_loss(params)
    pd = params.p_dark
    both_arrive = (1.0 - p0) ** 2 * (1.0 - pd) ** 2
    dark = 2.0 * (p0**2 * pd**2 * (1.0 - pd) ** 2 + p0 * (1.0 - p0) * pd * (1.0 - pd) ** 2)
    p = np.zeros(16)
    for a, sa in enumerate(alice.states):
        for b, sb in enumerate(bob.states):
            p_pass = sa.prob * sb.prob * bell_pass_prob(sa.rho, sb.rho)
            p[4 * a + b] = both_arrive * p_pass + dark * sa.prob * sb.prob
    return DetectionStats(p_det=p)


def build_gamma(alice: SignalEnsemble, bob: SignalEnsemble) -> GammaMatrix:
    """Assemble the 16x16 state matrix and estimate its condition number.

    Row t factorizes as the Kronecker product of the two parties' vectorized
    weighted states, so the full matrix is ``RA (x) RB`` with RA, RB the 4x4
    per-party row matrices.  Singularity is not an error here; it surfaces
    when the matrix is inverted downstream.
    """
    RA = np.vstack([vec_rowmajor(s.weighted()) for s in alice.states])
    RB = np.vstack([vec_rowmajor(s.weighted()) for s in bob.states])
    gamma = np.kron(RA, RB)
    cond = float(np.linalg.cond(gamma))
    return GammaMatrix(gamma=gamma, cond=cond)
