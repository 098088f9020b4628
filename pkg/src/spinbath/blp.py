"""Trace-distance (BLP) non-Markovianity for excitation-conserving qubit channels.

For these channels the trace distance between two evolved states can only
grow when ``a - c`` or ``|b|^2`` grows, so the pair ``(e, g)`` and an
antipodal pair on the equator witness every backflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelTrajectory

__all__ = [
    "BlochState",
    "BLPResult",
    "Interval",
    "EXCITED",
    "GROUND",
    "X_PLUS",
    "X_MINUS",
    "Y_PLUS",
    "DEFAULT_PAIRS",
    "trace_distance",
    "apply_channel",
    "evolve_bloch",
    "blp_measure",
    "sphere_pairs",
    "backflow_witness",
]


@dataclass(frozen=True)
class BlochState:
    v1: float
    v2: float
    v3: float

    def __post_init__(self):
        if self.v1**2 + self.v2**2 + self.v3**2 > 1 + 1e-9:
            raise ValueError("Bloch vector longer than one")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3])

    def density_matrix(self) -> np.ndarray:
        """``(1 + v.sigma)/2`` in the ``(e, g)`` basis."""
        v1, v2, v3 = self.v1, self.v2, self.v3
        return 0.5 * np.array([[1 + v3, v1 - 1j * v2], [v1 + 1j * v2, 1 - v3]])

    @classmethod
    def from_density_matrix(cls, rho):
        rho = np.asarray(rho)
        return cls(2 * rho[1, 0].real, 2 * rho[1, 0].imag, (rho[0, 0] - rho[1, 1]).real)

    def antipode(self) -> "BlochState":
        return BlochState(-self.v1, -self.v2, -self.v3)


EXCITED = BlochState(0.0, 0.0, 1.0)
GROUND = BlochState(0.0, 0.0, -1.0)
X_PLUS = BlochState(1.0, 0.0, 0.0)
X_MINUS = BlochState(-1.0, 0.0, 0.0)
Y_PLUS = BlochState(0.0, 1.0, 0.0)
DEFAULT_PAIRS = ((EXCITED, GROUND), (X_PLUS, X_MINUS))


def trace_distance(s1: BlochState, s2: BlochState) -> float:
    return 0.5 * float(np.linalg.norm(s1.vector - s2.vector))


def _evolve_components(a, b, c, s: BlochState):
    # coherence <e|rho|g> = (v1 - i v2)/2 is multiplied by b
    w = np.conj(b) * (s.v1 + 1j * s.v2)
    rho_ee = 0.5 * (1 + s.v3)
    return w.real, w.imag, 2 * (a - c) * rho_ee + 2 * c - 1


def apply_channel(sample, initial: BlochState) -> BlochState:
    """Bloch vector after the channel ``(a, b, c)``."""
    v1, v2, v3 = _evolve_components(sample.a, complex(sample.b), sample.c, initial)
    return BlochState(float(v1), float(v2), float(v3))


def evolve_bloch(traj: ChannelTrajectory, initial: BlochState) -> np.ndarray:
    """Bloch vectors along a trajectory, shape ``(K + 1, 3)``."""
    return np.stack(_evolve_components(traj.a, traj.b, traj.c, initial), axis=-1)


@dataclass
class BLPResult:
    N_BLP: float
    contributions: list
    distances: list
    negative_population_gap: bool = False

    @property
    def best_pair(self) -> int:
        return int(np.argmax(self.contributions))


def sphere_pairs(n=50):
    """Antipodal pairs from a Fibonacci lattice on the upper hemisphere."""
    pairs = []
    golden = np.pi * (3 - np.sqrt(5))
    for i in range(n):
        z = 1 - (i + 0.5) / n
        r = np.sqrt(1 - z * z)
        phi = golden * i
        s = BlochState(r * np.cos(phi), r * np.sin(phi), z)
        pairs.append((s, s.antipode()))
    return pairs


def blp_measure(traj: ChannelTrajectory, pairs=DEFAULT_PAIRS, tol=1e-10) -> BLPResult:
    """Sum of positive trace-distance increments, maximised over ``pairs``."""
    contributions, distances = [], []
    for s1, s2 in pairs:
        d = 0.5 * np.linalg.norm(evolve_bloch(traj, s1) - evolve_bloch(traj, s2), axis=1)
        inc = np.diff(d)
        contributions.append(float(inc[inc > tol].sum()))
        distances.append(d)
    negative = bool(np.any(traj.a - traj.c < -tol))
    return BLPResult(max(contributions), contributions, distances, negative)


@dataclass(frozen=True)
class Interval:
    start: float
    stop: float
    source: str


def _runs(mask, t, source):
    out = []
    n = len(mask)
    i = 0
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            out.append(Interval(float(t[i]), float(t[j]), source))
            i = j + 1
        else:
            i += 1
    return out


def backflow_witness(traj: ChannelTrajectory, tol=1e-10):
    """Time intervals where ``d(a-c)/dt > tol`` or ``d|b|^2/dt > tol``.

    Returns ``(intervals, negative_gap)`` where ``negative_gap`` flags
    samples with ``a - c < 0``, outside the regime where the two conditions
    are exhaustive.
    """
    dt = traj.dt
    gap_rate = np.gradient(traj.a - traj.c, dt)
    coh_rate = np.gradient(np.abs(traj.b) ** 2, dt)
    intervals = _runs(gap_rate > tol, traj.t, "population") + _runs(coh_rate > tol, traj.t, "coherence")
    intervals.sort(key=lambda iv: (iv.start, iv.source))
    return intervals, bool(np.any(traj.a - traj.c < -tol))
