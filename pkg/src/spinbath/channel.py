"""Qubit dynamical maps, divisibility robustness and rate functions.

Conventions
-----------
Density matrices are vectorised by column stacking, ``vec(X)[i + d*j] = X[i, j]``,
so a map is a ``d**2 x d**2`` matrix ``T`` with ``vec(E(X)) = T @ vec(X)``.
The qubit basis is ``(e, g)``: index 0 is the excited state.  With this
convention the excitation-conserving channel reads::

    [[a,   0,      0, c  ],
     [0,   conj(b), 0, 0  ],
     [0,   0,      b, 0  ],
     [1-a, 0,      0, 1-c]]

where ``b`` multiplies the coherence ``<e|rho|g>``.

Robustness values ``mu`` are reported per unit time (divided by the step
``dt``), so that the time average ``mu_bar`` and the degree
``1 - exp(mu_bar * (1 - d**2))`` converge as ``dt -> 0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm

__all__ = [
    "TAU_PLUS",
    "TAU_MINUS",
    "TAU_Z",
    "QubitChannelSample",
    "ChannelTrajectory",
    "BranchDecomposition",
    "StepRobustness",
    "RateSample",
    "RateTrajectory",
    "RobustnessResult",
    "time_grid",
    "vec",
    "unvec",
    "lindblad_superop",
    "block_generator",
    "build_map_matrix",
    "choi",
    "unchoi",
    "omega_projector",
    "step_channel",
    "branch_decomposition",
    "robustness_step",
    "extract_rates_generic",
    "rates_analytic",
    "degree",
    "robustness_trajectory",
    "propagate_rates",
]

TAU_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
TAU_MINUS = TAU_PLUS.T.copy()
TAU_Z = np.diag([1.0, -1.0]).astype(complex)
_E_PROJ = TAU_PLUS @ TAU_MINUS


@dataclass(frozen=True)
class QubitChannelSample:
    t: float
    a: float
    b: complex
    c: float


@dataclass
class ChannelTrajectory:
    """Channel elements sampled on a uniform grid ``t = n * dt``.

    Arrays share one length ``K + 1``; sample 0 is the identity channel.
    ``meta`` carries engine name and warnings.
    """

    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=complex)
        n = len(self.t)
        if not (len(self.a) == len(self.b) == len(self.c) == n):
            raise ValueError("channel element arrays must match the time grid")
        if n > 1:
            steps = np.diff(self.t)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])):
                raise ValueError("time grid must be uniform and increasing")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def K(self) -> int:
        return len(self.t) - 1

    def __len__(self):
        return len(self.t)

    def sample(self, n) -> QubitChannelSample:
        return QubitChannelSample(float(self.t[n]), float(self.a[n]), complex(self.b[n]), float(self.c[n]))

    def maps(self) -> np.ndarray:
        """All map matrices stacked, shape ``(K + 1, 4, 4)``."""
        T = np.zeros((len(self.t), 4, 4), dtype=complex)
        T[:, 0, 0] = self.a
        T[:, 0, 3] = self.c
        T[:, 1, 1] = np.conj(self.b)
        T[:, 2, 2] = self.b
        T[:, 3, 0] = 1.0 - self.a
        T[:, 3, 3] = 1.0 - self.c
        return T

    def window(self, t_max) -> "ChannelTrajectory":
        keep = self.t <= t_max + 1e-9 * self.dt
        return ChannelTrajectory(self.t[keep], self.a[keep], self.b[keep], self.c[keep], dict(self.meta))


def time_grid(t_fin, dt):
    """Uniform grid ``0, dt, ..., K dt`` with ``K = round(t_fin / dt)``."""
    K = int(round(t_fin / dt))
    return np.arange(K + 1) * dt


def vec(X):
    return np.asarray(X).reshape(-1, order="F")


def unvec(v, d=None):
    v = np.asarray(v)
    d = d or int(round(np.sqrt(v.size)))
    return v.reshape((d, d), order="F")


def lindblad_superop(H, jump_ops=(), rates=()):
    """Matrix of ``rho -> -i[H, rho] + sum_i g_i (L rho L^+ - {L^+ L, rho}/2)``."""
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    eye = np.eye(d)
    S = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for L, g in zip(jump_ops, rates):
        L = np.asarray(L, dtype=complex)
        LdL = L.conj().T @ L
        S = S + g * (np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye))
    return S


def block_generator(E_LS, gamma1, gamma2, gamma3):
    """Generator of the qubit master equation with Lamb shift and three rates.

    ``gamma1`` multiplies the unnormalised dephasing ``tau_z rho tau_z - rho``,
    ``gamma2`` the pumping ``tau_+`` and ``gamma3`` the decay ``tau_-``.
    """
    return lindblad_superop(E_LS * _E_PROJ, (TAU_Z, TAU_PLUS, TAU_MINUS), (gamma1, gamma2, gamma3))


def build_map_matrix(sample) -> np.ndarray:
    """4x4 map matrix of an excitation-conserving qubit channel."""
    a, b, c = float(sample.a), complex(sample.b), float(sample.c)
    return np.array(
        [
            [a, 0, 0, c],
            [0, np.conj(b), 0, 0],
            [0, 0, b, 0],
            [1 - a, 0, 0, 1 - c],
        ],
        dtype=complex,
    )


def _reshuffle(T, d):
    return T.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)


def choi(T) -> np.ndarray:
    """Choi matrix ``d (T x 1)[omega]``; positive semidefinite iff ``T`` is CP.

    Rows are indexed by ``(output, ancilla)`` pairs in row-major order, so an
    eigenvector reshaped with ``v.reshape(d, d)`` is the matching Kraus or
    Lindblad operator.
    """
    T = np.asarray(T)
    d = int(round(np.sqrt(T.shape[0])))
    return _reshuffle(T, d)


def unchoi(C) -> np.ndarray:
    C = np.asarray(C)
    d = int(round(np.sqrt(C.shape[0])))
    return C.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def omega_projector(d=2):
    w = np.eye(d).reshape(-1) / np.sqrt(d)
    P = np.outer(w, w)
    return P, np.eye(d * d) - P


def step_channel(T_t, T_next, rcond=1e-10):
    """Intermediate map ``T_next @ inv(T_t)``.

    Returns ``(dT, singular)``.  When ``T_t`` is numerically singular a
    pseudoinverse with relative cutoff ``rcond`` is used and ``singular`` is
    True.
    """
    s = np.linalg.svd(T_t, compute_uv=False)
    singular = s[-1] <= rcond * s[0]
    if singular:
        inv = np.linalg.pinv(T_t, rcond=rcond)
    else:
        inv = np.linalg.inv(T_t)
    return T_next @ inv, bool(singular)


@dataclass
class BranchDecomposition:
    """Hermitian logarithm branches ``L0 + 2 pi i sum_c m_c (P_c - P_cbar)``."""

    L0: np.ndarray
    pair_differences: list
    eigenvalues: np.ndarray
    omega: np.ndarray
    omega_perp: np.ndarray
    hermiticity_preserving: bool
    negative_real_eigenvalue: bool

    def branch(self, m) -> np.ndarray:
        L = self.L0.astype(complex)
        for mc, D in zip(m, self.pair_differences):
            L = L + 2j * np.pi * mc * D
        return L

    def projected_choi(self, m=None):
        L = self.L0 if m is None else self.branch(m)
        C = choi(L)
        return self.omega_perp @ C @ self.omega_perp

    def pair_terms(self):
        """``A_c = 2 pi i w_perp (P_c - P_cbar)^Gamma w_perp`` for each pair."""
        return [2j * np.pi * (self.omega_perp @ choi(D) @ self.omega_perp) for D in self.pair_differences]


def branch_decomposition(dT, imag_tol=1e-10, herm_tol=1e-9) -> BranchDecomposition:
    dT = np.asarray(dT, dtype=complex)
    d = int(round(np.sqrt(dT.shape[0])))
    lam, V = np.linalg.eig(dT)
    scale = np.maximum(np.abs(lam), 1e-300)
    is_real = np.abs(lam.imag) <= imag_tol * scale
    negative_real = bool(np.any(is_real & (lam.real < 0)))

    # conjugate pairs: real eigenvalues or pairs are required for hermiticity preservation
    upper = [i for i in range(len(lam)) if not is_real[i] and lam[i].imag > 0]
    lower = [i for i in range(len(lam)) if not is_real[i] and lam[i].imag < 0]
    pairs, paired_ok = [], len(upper) == len(lower)
    free = list(lower)
    for i in upper:
        if not free:
            paired_ok = False
            break
        j = min(free, key=lambda j: abs(lam[j] - np.conj(lam[i])))
        if abs(lam[j] - np.conj(lam[i])) > 1e-6 * scale[i]:
            paired_ok = False
        free.remove(j)
        pairs.append((i, j))

    try:
        Vinv = np.linalg.inv(V)
        diffs = [np.outer(V[:, i], Vinv[i]) - np.outer(V[:, j], Vinv[j]) for i, j in pairs]
    except np.linalg.LinAlgError:
        diffs = []

    if negative_real:
        L0 = np.full_like(dT, np.nan)
        herm = False
    else:
        # subnormal entries make scipy's Schur-based logm fail
        tiny = np.finfo(float).tiny
        clean = np.where(np.abs(dT.real) < tiny, 0.0, dT.real) + 1j * np.where(np.abs(dT.imag) < tiny, 0.0, dT.imag)
        L0 = logm(clean)
        C = choi(L0)
        herm = bool(np.max(np.abs(C - C.conj().T)) <= herm_tol * max(1.0, np.max(np.abs(C))))
    w, wp = omega_projector(d)
    return BranchDecomposition(
        L0=L0,
        pair_differences=diffs,
        eigenvalues=lam,
        omega=w,
        omega_perp=wp,
        hermiticity_preserving=herm and paired_ok,
        negative_real_eigenvalue=negative_real,
    )


@dataclass(frozen=True)
class StepRobustness:
    mu: float
    infinite: bool = False
    nonhermitian_log: bool = False
    negative_real_eigenvalue: bool = False
    branch: tuple = ()
    lambda_min: float = 0.0


def robustness_step(dT, dt, branch_window=2, tol=1e-10) -> StepRobustness:
    """Minimal isotropic noise rate restoring a valid Lindblad step.

    ``mu = d * max(0, -lambda_min) / dt`` where ``lambda_min`` is the lowest
    eigenvalue of the projected Choi matrix of the best logarithm branch
    within ``|m_c| <= branch_window``.  Steps whose logarithm cannot be made
    hermiticity preserving get ``infinite=True``.
    """
    dT = np.asarray(dT, dtype=complex)
    d = int(round(np.sqrt(dT.shape[0])))
    bd = branch_decomposition(dT)
    if bd.negative_real_eigenvalue:
        return StepRobustness(np.inf, infinite=True, negative_real_eigenvalue=True)
    if not bd.hermiticity_preserving:
        return StepRobustness(np.inf, infinite=True, nonhermitian_log=True)

    A0 = bd.projected_choi()
    A0 = 0.5 * (A0 + A0.conj().T)
    Ac = [0.5 * (A + A.conj().T) for A in bd.pair_terms()]
    best_lam, best_m = -np.inf, ()
    window = range(-branch_window, branch_window + 1)
    for m in itertools.product(window, repeat=len(Ac)):
        A = A0 + sum((mc * A for mc, A in zip(m, Ac)), np.zeros_like(A0))
        lam = np.linalg.eigvalsh(A)[0]
        # the zero mode along omega is excluded by the projection
        if lam > best_lam + 1e-15 or (abs(lam - best_lam) <= 1e-15 and sum(map(abs, m)) < sum(map(abs, best_m))):
            best_lam, best_m = lam, m
    rate = d * max(0.0, -best_lam) / dt
    if rate <= tol:
        rate = 0.0
    return StepRobustness(rate, branch=tuple(best_m), lambda_min=float(best_lam))


def extract_rates_generic(dT, dt, zero_tol=1e-12):
    """Rates and Lindblad operators from the projected Choi matrix of ``log dT``.

    Returns a list of ``(gamma, L)`` with ``L`` normalised to unit
    Hilbert-Schmidt norm, ordered by increasing ``gamma``.
    """
    bd = branch_decomposition(dT)
    if bd.negative_real_eigenvalue or not bd.hermiticity_preserving:
        raise ValueError("step logarithm is not hermiticity preserving")
    A = bd.projected_choi()
    A = 0.5 * (A + A.conj().T)
    d = int(round(np.sqrt(A.shape[0])))
    lam, v = np.linalg.eigh(A)
    scale = max(zero_tol, zero_tol * np.max(np.abs(lam), initial=0.0))
    out = []
    for li, vi in zip(lam, v.T):
        if abs(li) <= scale:
            continue
        L = vi.reshape(d, d)
        out.append((li / (np.trace(L.conj().T @ L).real * dt), L))
    return out


@dataclass(frozen=True)
class RateSample:
    t: float
    E_LS: float
    gamma1: float
    gamma2: float
    gamma3: float
    mu: float
    flags: str = ""


@dataclass
class RateTrajectory:
    """Lamb shift, the three rates and per-sample robustness along a trajectory."""

    t: np.ndarray
    E_LS: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    mu: np.ndarray
    divergent: np.ndarray
    phase_unreliable: np.ndarray

    def flags(self, n) -> str:
        tags = []
        if self.divergent[n]:
            tags.append("divergent")
        if self.phase_unreliable[n]:
            tags.append("phase")
        return "|".join(tags)

    def samples(self):
        return [
            RateSample(float(self.t[n]), float(self.E_LS[n]), float(self.gamma1[n]), float(self.gamma2[n]),
                       float(self.gamma3[n]), float(self.mu[n]), self.flags(n))
            for n in range(len(self.t))
        ]

    @property
    def gamma_min_eig(self):
        """Lowest eigenvalue of the projected generator per unit time."""
        return np.minimum(2.0 * self.gamma1, np.minimum(self.gamma2, self.gamma3))


def rates_analytic(traj: ChannelTrajectory, tol=1e-10, crossing_tol=1e-10, b_floor=1e-8) -> RateTrajectory:
    """Closed-form Lamb shift and rates of an excitation-conserving channel.

    Derivatives are central differences (one-sided at the ends).  Samples
    next to a sign change of ``a - c`` (or where it vanishes) are flagged
    divergent and assigned infinite robustness.
    """
    dt = traj.dt
    a, b, c = traj.a, traj.b, traj.c
    diff = a - c
    coh = np.abs(b) ** 2

    phase_unreliable = np.abs(b) < b_floor
    phase = np.unwrap(np.angle(b))
    E_LS = -np.gradient(phase, dt)

    da = np.gradient(a, dt)
    dc = np.gradient(c, dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(diff) / coh
        g1 = 0.25 * np.gradient(np.log(ratio), dt)
        g2 = (a * dc - c * da) / diff
        g3 = ((1 - a) * dc - (1 - c) * da) / diff

    divergent = np.abs(diff) <= crossing_tol
    sign_change = np.sign(diff[1:]) != np.sign(diff[:-1])
    divergent[1:] |= sign_change
    divergent[:-1] |= sign_change

    lam = np.minimum(2.0 * g1, np.minimum(g2, g3))
    mu = np.where(lam < -tol, -2.0 * lam, 0.0)
    mu = np.where(divergent | ~np.isfinite(lam), np.inf, mu)
    return RateTrajectory(traj.t.copy(), E_LS, g1, g2, g3, mu, divergent, phase_unreliable)


@dataclass
class RobustnessResult:
    mu: np.ndarray
    mu_bar: float
    degree: float
    infinite_steps: int = 0
    nonhermitian_log: int = 0
    negative_real_eigenvalue: int = 0
    singular_map: int = 0

    @property
    def markovian(self) -> bool:
        return self.degree == 0.0


def degree(mu, d=2, **flag_counts) -> RobustnessResult:
    """Normalised non-Markovianity ``1 - exp(mu_bar (1 - d^2))``.

    Infinite entries of ``mu`` are excluded from the average and force the
    degree to one.
    """
    mu = np.asarray(mu, dtype=float)
    inf = ~np.isfinite(mu)
    finite = mu[~inf]
    mu_bar = float(finite.mean()) if finite.size else 0.0
    N = 1.0 if inf.any() else float(-np.expm1(mu_bar * (1 - d * d)))
    return RobustnessResult(mu=mu, mu_bar=mu_bar, degree=N, infinite_steps=int(inf.sum()), **flag_counts)


def robustness_trajectory(traj: ChannelTrajectory, branch_window=2, tol=1e-10) -> RobustnessResult:
    """Step-by-step robustness over a sampled trajectory (K steps)."""
    T = traj.maps()
    dt = traj.dt
    mus = np.zeros(traj.K)
    counts = dict(nonhermitian_log=0, negative_real_eigenvalue=0, singular_map=0)
    for n in range(traj.K):
        dT, singular = step_channel(T[n], T[n + 1])
        counts["singular_map"] += singular
        step = robustness_step(dT, dt, branch_window=branch_window, tol=tol)
        counts["nonhermitian_log"] += step.nonhermitian_log
        counts["negative_real_eigenvalue"] += step.negative_real_eigenvalue
        mus[n] = step.mu
    return degree(mus, 2, **counts)


def propagate_rates(rates: RateTrajectory, T0=None) -> np.ndarray:
    """Integrate the master equation with the given rate functions.

    Each step uses the trapezoidal average of the rates at its end points,
    giving a second-order accurate map at the final time.
    """
    t = rates.t
    T = np.eye(4, dtype=complex) if T0 is None else np.asarray(T0, dtype=complex)
    for n in range(len(t) - 1):
        dt = t[n + 1] - t[n]
        avg = [0.5 * (x[n] + x[n + 1]) for x in (rates.E_LS, rates.gamma1, rates.gamma2, rates.gamma3)]
        T = expm(dt * block_generator(*avg)) @ T
    return T
