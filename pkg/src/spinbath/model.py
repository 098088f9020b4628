"""Physical model: emitter spin coupled to one site of an XY chain.

Energies and times are in units of the hopping ``J`` unless stated otherwise.
The chain is diagonalised in closed form by a sine transform; mode ``k`` has
energy ``E_k = 2 J cos(pi k / (N + 1)) + 2 h`` so energies decrease with ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

__all__ = [
    "SystemSpec",
    "ModeBasis",
    "EnvInitialState",
    "SelfConsistency",
    "chain_matrix",
    "diagonalize_environment",
    "occupations",
    "continuum_occupation",
    "density_of_states",
    "spectral_density",
    "spectral_density_broadened",
    "self_consistency_metric",
    "EngineCapabilityError",
]


@dataclass(frozen=True)
class SystemSpec:
    """Hamiltonian parameters of the emitter + chain system.

    ``Delta`` is the bare emitter splitting; the detuning from the band centre
    is always derived via :attr:`Delta_h` and never stored.
    """

    N: int
    Omega: float
    Delta: float
    m0: int = 1
    J: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"chain length must be a positive integer, got {self.N}")
        if not self.J > 0:
            raise ValueError(f"hopping J must be positive, got {self.J}")
        if not 1 <= self.m0 <= self.N:
            raise ValueError(f"coupling site m0={self.m0} outside 1..{self.N}")

    @classmethod
    def from_detuning(cls, N, Omega, Delta_h, m0=1, J=1.0, h=0.0):
        return cls(N=N, Omega=Omega, Delta=Delta_h + 2.0 * h, m0=m0, J=J, h=h)

    @property
    def Delta_h(self) -> float:
        return self.Delta - 2.0 * self.h

    @property
    def is_center(self) -> bool:
        return self.m0 in (self.N // 2, (self.N + 1) // 2) and self.N > 2

    @property
    def echo_time(self) -> float:
        """Time after which waves reflected at the far chain end return to ``m0``."""
        return max(self.m0 - 1, self.N - self.m0) / self.J

    def replace(self, **changes) -> "SystemSpec":
        params = dict(N=self.N, Omega=self.Omega, Delta=self.Delta, m0=self.m0, J=self.J, h=self.h)
        params.update(changes)
        return SystemSpec(**params)


@dataclass(frozen=True)
class ModeBasis:
    """Sine-transform eigenbasis of the chain; ``W`` is symmetric and orthogonal."""

    W: np.ndarray
    E: np.ndarray

    @property
    def N(self) -> int:
        return len(self.E)


@dataclass(frozen=True)
class EnvInitialState:
    """Number-conserving initial state of the chain.

    Use the constructors :meth:`vacuum`, :meth:`ground`, :meth:`thermal` and
    :meth:`single_mode` rather than instantiating directly.
    """

    kind: str
    beta: float | None = None
    h_prep: float | None = None
    k: int | None = None

    _KINDS = ("vacuum", "ground", "thermal", "single_mode")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown environment state {self.kind!r}")
        if self.kind == "thermal" and not (self.beta is not None and self.beta > 0):
            raise ValueError("thermal state needs beta > 0")
        if self.kind == "ground" and self.h_prep is None:
            raise ValueError("ground state needs the preparation field h_prep")
        if self.kind == "single_mode" and (self.k is None or self.k < 1):
            raise ValueError("single_mode state needs a mode index k >= 1")

    @classmethod
    def vacuum(cls):
        return cls("vacuum")

    @classmethod
    def ground(cls, h_prep):
        return cls("ground", h_prep=float(h_prep))

    @classmethod
    def thermal(cls, beta):
        return cls("thermal", beta=float(beta))

    @classmethod
    def single_mode(cls, k):
        return cls("single_mode", k=int(k))

    def label(self) -> str:
        if self.kind == "thermal":
            return f"thermal(beta={self.beta:g})"
        if self.kind == "ground":
            return f"ground(h={self.h_prep:g})"
        if self.kind == "single_mode":
            return f"single_mode(k={self.k})"
        return "vacuum"


def chain_matrix(N, J=1.0, h=0.0):
    """Single-particle (tridiagonal) matrix of the chain in the site basis."""
    H = np.diag(np.full(N, 2.0 * h))
    idx = np.arange(N - 1)
    H[idx, idx + 1] = J
    H[idx + 1, idx] = J
    return H


def _mode_energies(N, J, h):
    k = np.arange(1, N + 1)
    return 2.0 * J * np.cos(np.pi * k / (N + 1)) + 2.0 * h


def diagonalize_environment(spec: SystemSpec) -> ModeBasis:
    N = spec.N
    k = np.arange(1, N + 1)
    W = np.sqrt(2.0 / (N + 1)) * np.sin(np.pi * np.outer(k, k) / (N + 1))
    return ModeBasis(W=W, E=_mode_energies(N, spec.J, spec.h))


def occupations(basis: ModeBasis, env: EnvInitialState, J=1.0) -> np.ndarray:
    """Mode occupations ``f_k`` induced by ``env``.

    For the ground state the modes are filled according to the energies at the
    preparation field ``h_prep``; a mode sitting exactly at zero energy is
    half filled (zero-temperature limit of Fermi-Dirac).
    """
    N = basis.N
    if env.kind == "vacuum":
        return np.zeros(N)
    if env.kind == "thermal":
        return expit(-env.beta * basis.E)
    if env.kind == "ground":
        E = _mode_energies(N, J, env.h_prep)
        f = (E < 0).astype(float)
        f[np.abs(E) < 1e-12] = 0.5
        return f
    if env.k > N:
        raise ValueError(f"mode index {env.k} exceeds chain length {N}")
    f = np.zeros(N)
    f[env.k - 1] = 1.0
    return f


def continuum_occupation(E, spec: SystemSpec, env: EnvInitialState):
    """Occupation as a function of energy in the thermodynamic limit."""
    E = np.asarray(E, dtype=float)
    if env.kind == "vacuum":
        return np.zeros_like(E)
    if env.kind == "thermal":
        return expit(-env.beta * E)
    if env.kind == "ground":
        # the prepared state fills modes with E - 2h + 2 h_prep < 0
        shifted = E - 2.0 * spec.h + 2.0 * env.h_prep
        return np.where(shifted < 0, 1.0, np.where(shifted == 0, 0.5, 0.0))
    raise ValueError("a single occupied mode has no continuum occupation function")


def density_of_states(E, spec: SystemSpec):
    """Normalised density of chain states; ``inf`` exactly at the band edges."""
    x = np.asarray(E, dtype=float) - 2.0 * spec.h
    gap = 4.0 * spec.J**2 - x**2
    with np.errstate(divide="ignore", invalid="ignore"):
        n = np.where(gap > 0, 1.0 / (np.pi * np.sqrt(np.where(gap > 0, gap, 1.0))), 0.0)
    n = np.where(np.isclose(np.abs(x), 2.0 * spec.J, rtol=0, atol=1e-14 * spec.J), np.inf, n)
    return n[()] if n.ndim == 0 else n


def spectral_density(E, spec: SystemSpec, broadening=None):
    """Spectral density ``D(E)`` seen by the emitter.

    Without ``broadening`` the continuum form is returned: the density of
    states for centre coupling (periodic-chain surrogate) or the semicircle
    for edge coupling ``m0 = 1``.  With a broadening width the finite-``N``
    estimate :func:`spectral_density_broadened` is used instead.
    """
    if broadening is not None:
        return spectral_density_broadened(E, spec, broadening)
    if spec.m0 == 1:
        x = np.asarray(E, dtype=float) - 2.0 * spec.h
        gap = 4.0 * spec.J**2 - x**2
        return np.sqrt(np.clip(gap, 0.0, None)) / (2.0 * np.pi * spec.J**2)
    if spec.is_center:
        return density_of_states(E, spec)
    raise NotImplementedError(
        f"no continuum spectral density for interior site m0={spec.m0}; pass a broadening width"
    )


def spectral_density_broadened(E, spec: SystemSpec, eta=0.01):
    """Finite-chain spectral density with Gaussian broadening of width ``eta``."""
    basis = diagonalize_environment(spec)
    weights = basis.W[spec.m0 - 1] ** 2
    E = np.asarray(E, dtype=float)
    eta = eta * spec.J
    g = np.exp(-0.5 * ((E[..., None] - basis.E) / eta) ** 2) / (np.sqrt(2 * np.pi) * eta)
    return g @ weights


@dataclass(frozen=True)
class SelfConsistency:
    Gamma_plus: float
    Gamma_minus: float
    metric_plus: float
    metric_minus: float
    divergent: bool = False
    notes: tuple = field(default_factory=tuple)

    @property
    def metric(self) -> float:
        return max(self.metric_plus, self.metric_minus)


def self_consistency_metric(spec: SystemSpec, env: EnvInitialState, step=1e-5) -> SelfConsistency:
    """Flatness test for the standard Markovian master-equation derivation.

    Compares the slope of the occupied/empty spectral weight at the emitter
    energy with the Markovian rates it would induce; values well below one
    indicate the weak-coupling derivation is self consistent.
    """
    x = spec.Delta_h
    band = 2.0 * spec.J
    if abs(x) >= band - step * spec.J:
        return SelfConsistency(np.inf, np.inf, np.inf, np.inf, divergent=True,
                               notes=("emitter energy at or outside the band edge",))

    def alpha_plus(E):
        return spectral_density(E, spec) * continuum_occupation(E, spec, env)

    def alpha_minus(E):
        return spectral_density(E, spec) * (1.0 - continuum_occupation(E, spec, env))

    D = float(spectral_density(spec.Delta, spec))
    f = float(continuum_occupation(spec.Delta, spec, env))
    g_plus = 2.0 * np.pi * spec.Omega**2 * D * f
    g_minus = 2.0 * np.pi * spec.Omega**2 * D * (1.0 - f)
    gamma = max(g_plus, g_minus)
    eps = step * spec.J
    slope_plus = (alpha_plus(spec.Delta + eps) - alpha_plus(spec.Delta - eps)) / (2 * eps)
    slope_minus = (alpha_minus(spec.Delta + eps) - alpha_minus(spec.Delta - eps)) / (2 * eps)
    return SelfConsistency(
        Gamma_plus=g_plus,
        Gamma_minus=g_minus,
        metric_plus=float(abs(slope_plus) * gamma),
        metric_minus=float(abs(slope_minus) * gamma),
    )


class EngineCapabilityError(ValueError):
    """Requested scenario is outside what an engine supports."""
