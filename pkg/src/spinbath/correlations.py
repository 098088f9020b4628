"""Environment correlation functions seen by the emitter.

``alpha+(t) = tr(rho_E c^+ u e^{-iH_E t} u c e^{iH_E t})`` and
``alpha-(t) = tr(rho_E c u e^{-iH_E t} u c^+ e^{iH_E t})`` at the coupling
site, with ``u`` the Jordan-Wigner string.

For thermal chains both are Gaussian traces.  Conjugating with the string
replaces the chain matrix ``H`` by ``H' = V H V`` (sign flip on sites left of
``m0``), and with ``R = e^{-itH'} e^{itH}``, ``F = <c^+ c>`` and
``M = 1 - (1 - R) F`` the traces reduce to::

    alpha+ = det(M) [e^{itH'} (1 - (1 - F) M^-1)]_mm
    alpha- = det(M) [(1 - F) M^-1 e^{-itH'}]_mm

which only involves ``N x N`` matrices and stays finite for any ``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, j1

from .model import EngineCapabilityError, EnvInitialState, SystemSpec, diagonalize_environment, occupations

__all__ = [
    "CorrelationSeries",
    "CorrelationTime",
    "correlation_ns",
    "correlation_gaussian",
    "correlation_gaussian_converged",
    "gamma_f",
    "closed_form_infinite_T",
    "kernels",
    "complex_kernels",
    "correlation_time",
]


@dataclass
class CorrelationSeries:
    t: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    source: str

    def sum_rule_error(self) -> float:
        return float(abs(self.alpha_plus[0] + self.alpha_minus[0] - 1.0))


def correlation_ns(spec: SystemSpec, occ, t_grid) -> CorrelationSeries:
    """String-free correlation functions from mode occupations ``occ``.

    Exact for ``m0 = 1`` or an empty chain; ``occ`` may be an array of
    ``f_k`` or an :class:`EnvInitialState`.
    """
    basis = diagonalize_environment(spec)
    f = occupations(basis, occ, J=spec.J) if isinstance(occ, EnvInitialState) else np.asarray(occ, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    w = basis.W[spec.m0 - 1] ** 2
    ph = np.exp(1j * np.outer(t, basis.E))
    return CorrelationSeries(t, ph @ (w * f), ph.conj() @ (w * (1 - f)), "ns_sum")


def _string_signs(spec):
    return np.where(np.arange(1, spec.N + 1) < spec.m0, -1.0, 1.0)


def correlation_gaussian(spec: SystemSpec, beta, t_grid, occ=None) -> CorrelationSeries:
    """Correlation functions of a thermal chain including the string operator.

    ``occ`` overrides the Fermi-Dirac occupations (e.g. ground states).
    """
    basis = diagonalize_environment(spec)
    W, E = basis.W, basis.E
    f = expit(-beta * E) if occ is None else np.asarray(occ, dtype=float)
    v = _string_signs(spec)
    m = spec.m0 - 1
    N = spec.N
    I = np.eye(N)
    F = (W * f) @ W.T
    Q = I - F
    t = np.asarray(t_grid, dtype=float)
    ap = np.empty(len(t), dtype=complex)
    am = np.empty(len(t), dtype=complex)
    for i, ti in enumerate(t):
        fwd = (W * np.exp(1j * ti * E)) @ W.T  # e^{itH}
        bwd = fwd.conj()
        fwd_p = v[:, None] * fwd * v[None, :]
        bwd_p = fwd_p.conj()
        R = bwd_p @ fwd
        M = I - (I - R) @ F
        D = np.linalg.det(M)
        x = np.linalg.solve(M, np.stack([I[:, m], bwd_p[:, m]], axis=1))
        ap[i] = D * (fwd_p[m, m] - (fwd_p[m] @ Q) @ x[:, 0])
        am[i] = D * (Q[m] @ x[:, 1])
    return CorrelationSeries(t, ap, am, "gaussian_trace")


def correlation_gaussian_converged(spec: SystemSpec, beta, t_grid, tol=1e-6, N_max=4096):
    """Double ``N`` (keeping the relative coupling site) until results change by < ``tol``.

    Returns ``(series, N_used)``.
    """
    def at(N):
        m0 = 1 if spec.m0 == 1 else (N // 2 if spec.is_center else spec.m0)
        return correlation_gaussian(spec.replace(N=N, m0=m0), beta, t_grid)

    N = spec.N
    prev = at(N)
    while 2 * N <= N_max:
        nxt = at(2 * N)
        dev = max(np.abs(nxt.alpha_plus - prev.alpha_plus).max(), np.abs(nxt.alpha_minus - prev.alpha_minus).max())
        N, prev = 2 * N, nxt
        if dev < tol:
            return prev, N
    raise RuntimeError(f"correlation functions not converged to {tol} by N={N}")


def _logistic(z):
    """``1 / (1 + e^{-z})`` for complex ``z`` without overflow."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    pos = z.real >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def gamma_f(spec: SystemSpec, beta, tau=0.0) -> np.ndarray:
    """Two-point matrix ``tr(G C' C'^+)`` of the complex-temperature Gaussian operator.

    ``G ~ exp(-(beta - i tau) H_E)`` and ``C' = (f_1..f_N, f_1^+..f_N^+)`` with
    the string-rotated modes ``f_i = sum_j (V W)_{ji} c_j``.
    """
    basis = diagonalize_environment(spec)
    W, E = basis.W, basis.E
    T = W @ np.diag(_string_signs(spec)) @ W
    z = (beta - 1j * tau) * E
    upper = (T * _logistic(z)) @ T
    lower = (T * _logistic(-z)) @ T
    N = spec.N
    G = np.zeros((2 * N, 2 * N), dtype=complex)
    G[:N, :N] = upper
    G[N:, N:] = lower
    return G


def closed_form_infinite_T(spec: SystemSpec, t_grid) -> CorrelationSeries:
    """Infinite-temperature, infinite-chain correlation functions.

    Centre coupling gives a Gaussian ``exp(-J^2 t^2)/2``; edge coupling gives
    ``J_1(2Jt)/(2Jt)``, which already equals ``1/2`` at ``t = 0``.
    """
    t = np.asarray(t_grid, dtype=float)
    J = spec.J
    if spec.m0 == 1:
        x = 2 * J * t
        with np.errstate(divide="ignore", invalid="ignore"):
            env = np.where(x == 0, 0.5, j1(x) / np.where(x == 0, 1.0, x))
    elif spec.is_center:
        env = 0.5 * np.exp(-((J * t) ** 2))
    else:
        raise EngineCapabilityError(f"no closed form for coupling site m0={spec.m0}")
    ph = np.exp(2j * spec.h * t)
    return CorrelationSeries(t, ph * env, ph.conj() * env, "closed_form_infinite_T")


def complex_kernels(series: CorrelationSeries, Delta):
    """``alpha+ e^{-i Delta t}`` and ``alpha- e^{+i Delta t}``."""
    ph = np.exp(-1j * Delta * series.t)
    return series.alpha_plus * ph, series.alpha_minus * ph.conj()


def kernels(series: CorrelationSeries, Delta):
    """Real memory kernels ``Re(alpha+- e^{-+i Delta t})``."""
    kp, km = complex_kernels(series, Delta)
    return kp.real, km.real


@dataclass(frozen=True)
class CorrelationTime:
    tau_c: float
    omega_tau_c: float
    decay_time: float
    power_law: bool
    unresolved: bool

    @property
    def flagged(self) -> bool:
        return self.power_law or self.unresolved


def _envelope(kernel):
    return np.abs(np.asarray(kernel))


def correlation_time(t, kernel, Omega=1.0, tail_factor=3.0, max_power=4.0) -> CorrelationTime:
    """Decay time of a kernel envelope.

    ``tau_c`` is the first time after which the envelope stays below
    ``1/e`` of its maximum.  Complex input is treated as the analytic signal
    and its modulus is the envelope, so pass :func:`complex_kernels` output
    for oscillating kernels; for real input ``|K|`` is used.  The tail beyond
    ``tail_factor * tau_c`` is fitted by an exponential and by a power law;
    if the power law fits better with an exponent above ``-max_power``, or
    the envelope never drops within the grid, ``tau_c`` is reported as ``inf`` with the corresponding flag set.
    """
    t = np.asarray(t, dtype=float)
    env = _envelope(kernel)
    peak = env.max()
    # running maximum from the right: the envelope "stays below" after index i
    tail_max = np.maximum.accumulate(env[::-1])[::-1]
    below = tail_max < np.exp(-1) * peak
    if not below.any():
        return CorrelationTime(np.inf, np.inf, np.nan, False, True)
    i = int(np.argmax(below))
    tau = float(t[i - 1] + (t[i] - t[i - 1]) * (tail_max[i - 1] - np.exp(-1) * peak)
                / (tail_max[i - 1] - tail_max[i])) if i > 0 else float(t[0])

    tail = (t >= tail_factor * tau) & (tail_max > 1e-10 * peak) & (t > 0)
    power_law = False
    if tail.sum() >= 8:
        y = np.log(tail_max[tail] / peak)
        res_exp = np.polyfit(t[tail], y, 1, full=True)[1]
        (slope, _), res_pow = np.polyfit(np.log(t[tail]), y, 1, full=True)[:2]
        res_exp = float(res_exp[0]) if len(res_exp) else 0.0
        res_pow = float(res_pow[0]) if len(res_pow) else 0.0
        # only shallow power laws count as slow decay
        power_law = res_pow < 0.5 * res_exp and slope > -max_power
    elif tail_max[-1] > np.exp(-3) * peak:
        return CorrelationTime(np.inf, np.inf, tau, False, True)
    if power_law:
        return CorrelationTime(np.inf, np.inf, tau, True, False)
    return CorrelationTime(tau, Omega * tau, tau, False, False)
