"""Cross-engine, oracle and invariant checks with fixed tolerances.

Each ``check_*`` function runs one scenario and returns a
:class:`CheckResult`; :func:`run_suite` runs a selection of them.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .blp import blp_measure
from .channel import (
    ChannelTrajectory,
    block_generator,
    degree,
    rates_analytic,
    robustness_step,
    robustness_trajectory,
    step_channel,
    time_grid,
)
from .correlations import (
    closed_form_infinite_T,
    complex_kernels,
    correlation_gaussian,
    correlation_ns,
    correlation_time,
)
from .dense import correlation_dense_trace, tomography
from .gaussian import blp_markov_point, channel_m01, env_independence_check
from .model import EnvInitialState, SystemSpec
from .sector import BoundaryEchoWarning, evolve_vacuum, frequency_analysis

__all__ = ["CheckResult", "CHECKS", "run_suite", "synthetic_trajectory"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {info}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{v:.3g}"
    return str(v)


def _maxdiff(x, y):
    return float(max(np.abs(x.a - y.a).max(), np.abs(x.b - y.b).max(), np.abs(x.c - y.c).max()))


def check_engine_triangle():
    """Dense, Gaussian and sector engines agree for edge coupling."""
    spec = SystemSpec.from_detuning(6, 0.4, 1.0, m0=1)
    t = time_grid(5.0, 0.05)
    out = {}
    for env in (EnvInitialState.vacuum(), EnvInitialState.thermal(1.0)):
        out[f"dense_vs_gaussian[{env.label()}]"] = _maxdiff(tomography(spec, env, t), channel_m01(spec, env, t))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryEchoWarning)
        out["sector_vs_gaussian[vacuum]"] = _maxdiff(evolve_vacuum(spec, t), channel_m01(spec, EnvInitialState.vacuum(), t))
    passed = all(v <= 1e-8 for k, v in out.items() if k.startswith("dense")) and out["sector_vs_gaussian[vacuum]"] <= 1e-10
    return passed, out


def _first_negative(t, g, tol=0.0):
    idx = np.flatnonzero(g < -tol)
    return float(t[idx[0]]) if len(idx) else float("inf")


def check_band_centre():
    """Resonant decay at the band centre is divisible until most population is gone."""
    spec = SystemSpec.from_detuning(300, 0.4, 0.0, m0=150)
    traj = evolve_vacuum(spec, time_grid(30.0, 0.05))
    rates = rates_analytic(traj)
    early = traj.t <= 20 + 1e-9
    g3_min = float(rates.gamma3[early].min())
    N20 = robustness_trajectory(traj.window(20.0)).degree
    first = _first_negative(traj.t, rates.gamma3)
    out = {"min_gamma3_t<=20": g3_min, "N(20)": N20, "first_negative_gamma3": first}
    return g3_min >= -1e-4 and N20 <= 1e-3 and 20 <= first <= 30, out


def check_band_edge():
    """Detunings at the lower band edge are non-divisible with a population plateau."""
    out, ok = {}, True
    for dh in (-2.0, -1.9):
        spec = SystemSpec.from_detuning(400, 0.4, dh, m0=200)
        traj = evolve_vacuum(spec, time_grid(20.0, 0.05))
        rates = rates_analytic(traj)
        N = robustness_trajectory(traj).degree
        first = _first_negative(traj.t, rates.gamma3)
        out[f"N[{dh:g}]"] = N
        out[f"first_negative_gamma3[{dh:g}]"] = first
        ok &= N > 0 and first < 20
        if dh == -2.0:
            out["a(20)[-2]"] = float(traj.a[-1])
            ok &= traj.a[-1] > 0.01
    return ok, out


def check_frequencies():
    """Oscillations of the decay rate at 2J early and 4J late."""
    spec = SystemSpec.from_detuning(300, 0.4, 0.0, m0=150)
    traj = evolve_vacuum(spec, time_grid(20.0, 0.05))
    early = frequency_analysis(rates_analytic(traj).gamma3, traj.dt, window=(2.0, 15.0)).dominant
    edge = SystemSpec.from_detuning(600, 0.4, 0.0, m0=1)
    late_traj = evolve_vacuum(edge, time_grid(200.0, 0.05))
    late = frequency_analysis(rates_analytic(late_traj).gamma3, late_traj.dt, window=(100.0, 200.0),
                              clip_quantile=0.05).dominant
    out = {"early_peak/J": early, "late_peak/J": late}
    return abs(early - 2) <= 0.2 and abs(late - 4) <= 0.4, out


def check_blp_markov_point():
    """At the BLP-Markovian point the trace distance never grows while divisibility can fail."""
    dh = blp_markov_point(1.0).Delta_h
    spec = SystemSpec.from_detuning(300, 1.0, dh, m0=1)
    t = time_grid(100.0, 0.05)
    out = {"Delta_h": dh}
    vac = channel_m01(spec, EnvInitialState.vacuum(), t)
    out["max_da/dt"] = float(np.gradient(vac.a, vac.dt).max())
    ok = out["max_da/dt"] <= 1e-9
    for env in (EnvInitialState.vacuum(), EnvInitialState.ground(-0.5), EnvInitialState.thermal(1.0)):
        traj = vac if env.kind == "vacuum" else channel_m01(spec, env, t)
        out[f"N_BLP[{env.label()}]"] = blp_measure(traj).N_BLP
        ok &= out[f"N_BLP[{env.label()}]"] == 0
    ground = channel_m01(spec, EnvInitialState.ground(-0.5), t)
    rates = rates_analytic(ground)
    out["min_gamma2[ground]"] = float(np.nanmin(rates.gamma2))
    out["N[ground]"] = degree(rates.mu[1:]).degree
    ok &= out["min_gamma2[ground]"] < 0 and out["N[ground]"] > 0
    return ok, out


def check_env_independence():
    """The population gap a - c does not depend on the chain state for edge coupling."""
    spec = SystemSpec.from_detuning(300, 1.0, 1.0, m0=1)
    t = time_grid(50.0, 0.05)
    envs = [EnvInitialState.vacuum(), EnvInitialState.thermal(1.0), EnvInitialState.ground(-0.5),
            EnvInitialState.thermal(0.1), EnvInitialState.single_mode(150)]
    spread = env_independence_check(spec, envs, t)
    g1 = max(float(np.nanmax(np.abs(rates_analytic(channel_m01(spec, e, t)).gamma1))) for e in envs)
    return spread <= 1e-12 and g1 <= 1e-8, {"spread(a-c)": spread, "max|gamma1|": g1}


def check_infinite_temperature():
    """High-temperature correlation functions against their closed forms."""
    out = {}
    centre = SystemSpec.from_detuning(120, 0.4, 0.0, m0=60, h=0.0)
    t3 = np.linspace(0, 3, 121)
    g = correlation_gaussian(centre, 0.05, t3)
    ref = closed_form_infinite_T(centre, t3)
    out["centre_envelope_err/peak"] = float(np.abs(np.abs(g.alpha_plus) - np.abs(ref.alpha_plus)).max() / 0.5)
    edge = SystemSpec.from_detuning(2000, 0.4, 0.0, m0=1)
    t20 = np.linspace(0, 20, 401)
    ns = correlation_ns(edge, np.full(edge.N, 0.5), t20)
    cf = closed_form_infinite_T(edge, t20)
    out["edge_ns_vs_bessel"] = float(max(np.abs(ns.alpha_plus - cf.alpha_plus).max(),
                                         np.abs(ns.alpha_minus - cf.alpha_minus).max()))
    taus = []
    for dh in (0.0, -2.0):
        spec = SystemSpec.from_detuning(120, 0.4, dh, m0=60, h=1.0)
        series = correlation_gaussian(spec, 0.05, np.linspace(0, 8, 321))
        kp, km = complex_kernels(series, spec.Delta)
        taus.append(max(correlation_time(series.t, kp).tau_c, correlation_time(series.t, km).tau_c))
        out[f"tau_c[{dh:g}]"] = taus[-1]
    rel = abs(taus[0] - taus[1]) / max(taus)
    out["tau_c_rel_diff"] = rel
    ok = out["centre_envelope_err/peak"] <= 0.02 and out["edge_ns_vs_bessel"] <= 1e-6 and rel <= 0.2
    return ok, out


def check_crossing():
    """Thermal crossing of a and c: dephasing turns negative before any trace-distance growth."""
    out = {}
    t = time_grid(10.0, 0.02)
    found = None
    for dh in np.arange(-2.0, -1.45, 0.1):
        spec = SystemSpec.from_detuning(8, 0.4, float(dh), m0=4, h=1.0)
        traj = tomography(spec, EnvInitialState.thermal(10.0), t)
        gap = traj.a - traj.c
        cross = np.flatnonzero(np.sign(gap[1:]) != np.sign(gap[:-1]))
        if not len(cross):
            continue
        rates = rates_analytic(traj)
        t_cross = float(t[cross[0] + 1])
        t_g1 = _first_negative(t, rates.gamma1, 1e-10)
        blp = blp_measure(traj)
        grow = [np.flatnonzero(np.diff(d) > 1e-10) for d in blp.distances]
        t_blp = min((float(t[g[0]]) for g in grow if len(g)), default=float("inf"))
        divergent = bool(rates.divergent[cross[0]] and rates.divergent[cross[0] + 1])
        if t_g1 < t_blp and t_g1 < t_cross and divergent:
            found = dict(Delta_h=round(float(dh), 3), t_cross=t_cross, t_gamma1_negative=t_g1, t_first_backflow=t_blp)
            break
    if found is None:
        return False, {"detuning_found": False}
    out.update(found)
    return True, out


def synthetic_trajectory(rng, K=100, dt=0.05, pieces=5, negative=None):
    """Trajectory generated by piecewise-constant rates aligned with the grid.

    ``negative = (piece, which, value)`` sets one rate of one piece
    negative.  Returns ``(trajectory, rates)`` with ``rates`` of shape
    ``(pieces, 4)`` holding ``(E_LS, g1, g2, g3)``.
    """
    rates = np.column_stack([rng.uniform(-1, 1, pieces), rng.uniform(0, 0.5, (pieces, 3))])
    if negative is not None:
        piece, which, value = negative
        rates[piece, which] = value
    bounds = np.linspace(0, K, pieces + 1).astype(int)
    T = np.eye(4, dtype=complex)
    maps = [T]
    for n in range(K):
        p = np.searchsorted(bounds, n, side="right") - 1
        T = expm(dt * block_generator(*rates[p])) @ T
        maps.append(T)
    maps = np.array(maps)
    t = dt * np.arange(K + 1)
    return ChannelTrajectory(t, maps[:, 0, 0].real, maps[:, 2, 2], maps[:, 0, 3].real), rates


def check_synthetic(n=100, seed=20240611):
    """Robustness vanishes for nonnegative rates and matches the closed form otherwise."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        traj, _ = synthetic_trajectory(rng)
        worst = max(worst, robustness_trajectory(traj).degree)
    traj, rates = synthetic_trajectory(rng, negative=(2, 3, -0.2))
    res = robustness_trajectory(traj)
    T = traj.maps()
    # closed form per step: mu = -d * gamma * tr(L^+ L) for the negative decay rate
    mu_err = 0.0
    for k in range(traj.K):
        dT, _ = step_channel(T[k], T[k + 1])
        _, g1, g2, g3 = _rates_at(rates, k, traj.K)
        mu_expected = 2.0 * max(0.0, -min(2 * g1, g2, g3))
        mu_err = max(mu_err, abs(robustness_step(dT, traj.dt).mu - mu_expected))
    out = {"max_N[nonnegative]": worst, "N[negative]": res.degree, "max|mu-closed_form|": mu_err}
    return worst <= 1e-6 and res.degree > 0 and mu_err <= 1e-8, out


def _rates_at(rates, step, K):
    pieces = len(rates)
    bounds = np.linspace(0, K, pieces + 1).astype(int)
    return rates[np.searchsorted(bounds, step, side="right") - 1]


def check_gaussian_trace():
    """Gaussian-trace correlation functions against the full dense trace."""
    out, ok = {}, True
    t = np.linspace(0, 5, 101)
    for m0 in (1, 4):
        for beta in (0.05, 1.0, 10.0):
            spec = SystemSpec.from_detuning(8, 0.4, 0.0, m0=m0)
            ap, am = correlation_dense_trace(spec, beta, t)
            g = correlation_gaussian(spec, beta, t)
            err = float(max(np.abs(ap - g.alpha_plus).max(), np.abs(am - g.alpha_minus).max()))
            out[f"m0={m0},beta={beta:g}"] = err
            ok &= err <= 1e-8
    return ok, out


CHECKS = {
    "1_engine_triangle": check_engine_triangle,
    "2_band_centre": check_band_centre,
    "3_band_edge": check_band_edge,
    "4_frequencies": check_frequencies,
    "5_blp_markov_point": check_blp_markov_point,
    "6_env_independence": check_env_independence,
    "7_infinite_temperature": check_infinite_temperature,
    "8_crossing": check_crossing,
    "9_synthetic": check_synthetic,
    "10_gaussian_trace": check_gaussian_trace,
}


def run_one(name) -> CheckResult:
    start = time.perf_counter()
    try:
        passed, details = CHECKS[name]()
    except Exception as exc:  # report, do not abort the suite
        passed, details = False, {"error": f"{type(exc).__name__}: {exc}"}
    return CheckResult(name, bool(passed), details, time.perf_counter() - start)


def run_suite(names=None):
    return [run_one(n) for n in (names or CHECKS)]
