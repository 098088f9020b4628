"""Free-fermion channel for an emitter coupled to the first chain site.

With ``m0 = 1`` the Jordan-Wigner string is trivial and the whole system is
a quadratic fermion model with single-particle matrix ``H1`` (emitter as
mode 0).  Channel elements follow from propagating the two-point matrix
``M = <c_i c_j^+>`` with ``P(t) = exp(-i H1 t)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelTrajectory
from .model import EngineCapabilityError, EnvInitialState, SystemSpec, diagonalize_environment, occupations
from .sector import BoundaryEchoWarning

__all__ = [
    "MarkovPoint",
    "single_particle_hamiltonian",
    "env_two_point",
    "propagator_row",
    "channel_m01",
    "env_independence_check",
    "blp_markov_point",
]


def single_particle_hamiltonian(spec: SystemSpec) -> np.ndarray:
    """Tridiagonal ``(N+1)`` matrix: diagonal ``(Delta, 2h, ...)``, off-diagonal ``(Omega, J, ...)``."""
    n = spec.N + 1
    H = np.diag(np.r_[spec.Delta, np.full(spec.N, 2.0 * spec.h)])
    off = np.r_[spec.Omega, np.full(spec.N - 1, spec.J)]
    H[np.arange(n - 1), np.arange(1, n)] = off
    H[np.arange(1, n), np.arange(n - 1)] = off
    return H


def env_two_point(spec: SystemSpec, env: EnvInitialState) -> np.ndarray:
    """Chain matrix ``M_E[i, j] = <c_i c_j^+>`` in the site basis."""
    basis = diagonalize_environment(spec)
    f = occupations(basis, env, J=spec.J)
    return (basis.W * (1.0 - f)) @ basis.W.T


def propagator_row(spec: SystemSpec, t_grid) -> np.ndarray:
    """Row 0 of ``exp(-i H1 t)`` for every time, shape ``(len(t), N + 1)``."""
    w, V = np.linalg.eigh(single_particle_hamiltonian(spec))
    return (np.exp(-1j * np.outer(t_grid, w)) * V[0]) @ V.T


def channel_m01(spec: SystemSpec, env: EnvInitialState, t_grid) -> ChannelTrajectory:
    """Channel elements for edge coupling and any number-conserving Gaussian chain state.

    ``b = P_00``; ``a`` and ``c`` are one minus the emitter entry of the
    propagated two-point matrix with the emitter initially excited
    (``<c_0 c_0^+> = 0``) or empty (``= 1``).
    """
    if spec.m0 != 1:
        raise EngineCapabilityError("the Gaussian engine requires edge coupling m0 = 1")
    t_grid = np.asarray(t_grid, dtype=float)
    echo = float(np.max(t_grid, initial=0.0)) > spec.echo_time
    if echo:
        warnings.warn(f"t exceeds the boundary echo time {spec.echo_time:g}", BoundaryEchoWarning, stacklevel=2)
    P = propagator_row(spec, t_grid)
    ME = env_two_point(spec, env)
    # (P M P^+)_00 with M = m_s (+) M_E; m_s = 0 for excited emitter, 1 for empty
    env_part = np.einsum("ti,ij,tj->t", P[:, 1:], ME, P[:, 1:].conj()).real
    p00 = np.abs(P[:, 0]) ** 2
    a = 1.0 - env_part
    c = 1.0 - env_part - p00
    meta = {"engine": "gaussian", "env": env.label(), "echo_horizon": spec.echo_time, "echo_exceeded": echo}
    return ChannelTrajectory(t_grid, a, P[:, 0], c, meta)


def env_independence_check(spec: SystemSpec, env_list, t_grid) -> float:
    """Largest spread of ``a - c`` across the given environment states."""
    diffs = np.array([(lambda tr: tr.a - tr.c)(channel_m01(spec, env, t_grid)) for env in env_list])
    return float(np.max(diffs.max(axis=0) - diffs.min(axis=0)))


@dataclass(frozen=True)
class MarkovPoint:
    Delta_h: float
    out_of_range: bool

    def __float__(self):
        return self.Delta_h


def blp_markov_point(Omega, J=1.0) -> MarkovPoint:
    """Detuning at which the vacuum excited population decays monotonically.

    Valid for ``Omega <= J``; larger couplings are flagged.
    """
    return MarkovPoint(2.0 * J - Omega**2 / J, bool(Omega > J))
