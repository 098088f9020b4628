"""Command-line entry point: trajectory | phase-diagram | correlations | validate.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 engine capability refusal.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .blp import blp_measure
from .channel import ChannelTrajectory, degree, rates_analytic, robustness_trajectory, time_grid
from .config import ConfigError, RunConfig, load_config
from .correlations import (
    closed_form_infinite_T,
    complex_kernels,
    correlation_gaussian,
    correlation_ns,
    correlation_time,
)
from .dense import tomography
from .gaussian import channel_m01
from .model import EngineCapabilityError, EnvInitialState, SystemSpec, diagonalize_environment, occupations
from .resolvent import vacuum_amplitude_tdl
from .sector import BoundaryEchoWarning, evolve_vacuum

__all__ = [
    "resolve_engine",
    "compute_trajectory",
    "run_trajectory",
    "run_phase_diagram",
    "run_correlations",
    "run_validate",
    "main",
]

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_CAPABILITY = 0, 1, 2, 3


def resolve_engine(engine, spec: SystemSpec, env: EnvInitialState, thermodynamic_limit=False, dense_cap=10) -> str:
    """Pick the engine for ``engine='auto'`` and check that the choice is supported."""
    if engine == "auto":
        if thermodynamic_limit:
            engine = "analytic"
        elif spec.m0 == 1:
            engine = "gaussian"
        elif env.kind == "vacuum":
            engine = "sector"
        else:
            engine = "dense"
    if engine == "gaussian" and spec.m0 != 1:
        raise EngineCapabilityError("the Gaussian engine needs m0 = 1")
    if engine in ("sector", "analytic") and env.kind != "vacuum":
        raise EngineCapabilityError(f"the {engine} engine only handles an empty chain")
    if engine == "analytic" and not (spec.m0 == 1 or spec.is_center):
        raise EngineCapabilityError("the analytic engine needs edge or centre coupling")
    if engine == "dense" and spec.N > dense_cap:
        raise EngineCapabilityError(f"dense engine refuses N={spec.N} above the cap {dense_cap}")
    return engine


def compute_trajectory(spec, env, engine, t_fin, dt, dense_cap=10) -> ChannelTrajectory:
    t = time_grid(t_fin, dt)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryEchoWarning)
        if engine == "gaussian":
            traj = channel_m01(spec, env, t)
        elif engine == "sector":
            traj = evolve_vacuum(spec, t)
        elif engine == "dense":
            traj = tomography(spec, env, t, cap=dense_cap)
        elif engine == "analytic":
            Ce, info = vacuum_amplitude_tdl(spec, t)
            traj = ChannelTrajectory(t, np.abs(Ce) ** 2, Ce, np.zeros_like(t), {"engine": "analytic", **info})
        else:
            raise EngineCapabilityError(f"unknown engine {engine!r}")
    traj.meta.setdefault("engine", engine)
    return traj


def _num(x):
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.12g" % x


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _num(v) for v in row) + "\n")


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _finite(x):
    x = float(x)
    return x if np.isfinite(x) else ("inf" if x > 0 else "nan")


_PLOT_TEMPLATE = '''"""Plot {csv} (generated; needs matplotlib)."""
import numpy as np
import matplotlib.pyplot as plt

data = np.genfromtxt("{csv}", delimiter=",", names=True, dtype=None, encoding="utf-8")
fig, axes = plt.subplots({n}, 1, sharex=True, figsize=(7, {height}))
for ax, col in zip(np.atleast_1d(axes), {cols!r}):
    ax.plot(data["{x}"], data[col])
    ax.set_ylabel(col)
np.atleast_1d(axes)[-1].set_xlabel("{x}")
fig.tight_layout()
fig.savefig("{png}")
'''


def _plot_script(out, csv_name, x, cols):
    path = Path(out) / f"plot_{Path(csv_name).stem}.py"
    path.write_text(_PLOT_TEMPLATE.format(csv=csv_name, n=len(cols), height=2 * len(cols), cols=list(cols),
                                          x=x, png=Path(csv_name).stem + ".png"))
    return path


def _summarise(traj, branch_window):
    rates = rates_analytic(traj)
    rob = robustness_trajectory(traj, branch_window=branch_window)
    return rates, rob


def run_trajectory(cfg: RunConfig, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    engine = resolve_engine(cfg.engine, cfg.spec, cfg.env, cfg.thermodynamic_limit, cfg.dense_cap)
    traj = compute_trajectory(cfg.spec, cfg.env, engine, cfg.t_fin, cfg.dt, cfg.dense_cap)
    rates, rob = _summarise(traj, cfg.branch_window)
    blp = blp_measure(traj)
    rows = [
        (t, traj.a[n], traj.c[n], traj.b[n].real, traj.b[n].imag, rates.E_LS[n], rates.gamma1[n],
         rates.gamma2[n], rates.gamma3[n], rates.mu[n], rates.flags(n))
        for n, t in enumerate(traj.t)
    ]
    header = ["t", "a", "c", "Re_b", "Im_b", "E_LS", "gamma1", "gamma2", "gamma3", "mu", "flags"]
    _write_csv(out / "trajectory.csv", header, rows)

    convergence = None
    if cfg.convergence:
        half = compute_trajectory(cfg.spec, cfg.env, engine, cfg.t_fin, cfg.dt / 2, cfg.dense_cap)
        N_half = robustness_trajectory(half, branch_window=cfg.branch_window).degree
        delta = abs(N_half - rob.degree)
        convergence = {"dt": cfg.dt, "N_dt": rob.degree, "N_dt_half": N_half, "delta": delta,
                       "converged": bool(delta < 1e-3)}
    summary = {
        "N_degree": rob.degree,
        "N_degree_rates": degree(rates.mu[1:]).degree,
        "mu_bar": rob.mu_bar,
        "N_BLP": blp.N_BLP,
        "N_BLP_pairs": blp.contributions,
        "engine": engine,
        "environment": cfg.env.label(),
        "system": {"N": cfg.spec.N, "Omega": cfg.spec.Omega, "Delta_h": cfg.spec.Delta_h, "m0": cfg.spec.m0,
                   "J": cfg.spec.J, "h": cfg.spec.h},
        "t_fin": float(traj.t[-1]),
        "dt": traj.dt,
        "convergence_report": convergence,
        "echo_horizon": cfg.spec.echo_time,
        "echo_exceeded": bool(traj.t[-1] > cfg.spec.echo_time),
        "flags": {"infinite_steps": rob.infinite_steps, "nonhermitian_log": rob.nonhermitian_log,
                  "negative_real_eigenvalue": rob.negative_real_eigenvalue, "singular_map": rob.singular_map,
                  "divergent_samples": int(rates.divergent.sum()),
                  "phase_unreliable_samples": int(rates.phase_unreliable.sum()),
                  "negative_population_gap": blp.negative_population_gap},
    }
    _write_json(out / "summary.json", summary)
    if cfg.plot_script:
        _plot_script(out, "trajectory.csv", "t", ["a", "c", "gamma1", "gamma2", "gamma3"])
    return summary


def _phase_point(args):
    spec, env, engine, t_fin, dt, cap, thermo = args
    try:
        eng = resolve_engine(engine, spec, env, thermo, cap)
        traj = compute_trajectory(spec, env, eng, t_fin, dt, cap)
        N = degree(rates_analytic(traj).mu[1:]).degree
        return (spec.Delta_h, spec.Omega, N, blp_measure(traj).N_BLP, "ok")
    except Exception as exc:  # per-point failures are recorded in the row
        return (spec.Delta_h, spec.Omega, float("nan"), float("nan"), f"error: {type(exc).__name__}: {exc}".replace(",", ";"))


def run_phase_diagram(cfg: RunConfig, out, jobs=1):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    s = cfg.spec
    points = [
        (SystemSpec.from_detuning(s.N, float(om), float(dh), m0=s.m0, J=s.J, h=s.h), cfg.env, cfg.engine,
         cfg.t_fin, cfg.dt, cfg.dense_cap, cfg.thermodynamic_limit)
        for om in cfg.Omega_grid
        for dh in cfg.Delta_h_grid
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_phase_point, points))
    else:
        rows = [_phase_point(p) for p in points]
    _write_csv(out / "phase_diagram.csv", ["Delta_h", "Omega", "N_degree", "N_BLP", "status"], rows)
    if cfg.plot_script:
        _plot_script(out, "phase_diagram.csv", "Delta_h", ["N_degree"])
    return rows


def run_correlations(cfg: RunConfig, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    spec, env = cfg.spec, cfg.env
    t = time_grid(cfg.t_fin, cfg.dt)
    if cfg.thermodynamic_limit:
        series = closed_form_infinite_T(spec, t)
    elif env.kind == "thermal":
        series = correlation_gaussian(spec, env.beta, t)
    elif env.kind == "vacuum" or spec.m0 == 1:
        series = correlation_ns(spec, env, t)
    elif env.kind == "ground":
        series = correlation_gaussian(spec, np.inf, t, occ=occupations(diagonalize_environment(spec), env, J=spec.J))
    else:
        raise EngineCapabilityError("correlation functions need a thermal, ground or empty chain")
    kp, km = complex_kernels(series, spec.Delta)
    rows = [
        (ti, series.alpha_plus[n].real, series.alpha_plus[n].imag, series.alpha_minus[n].real,
         series.alpha_minus[n].imag, kp[n].real, km[n].real)
        for n, ti in enumerate(series.t)
    ]
    header = ["t", "Re_alpha_plus", "Im_alpha_plus", "Re_alpha_minus", "Im_alpha_minus", "K_plus", "K_minus"]
    _write_csv(out / "correlations.csv", header, rows)
    tp = correlation_time(series.t, kp, spec.Omega)
    tm = correlation_time(series.t, km, spec.Omega)
    summary = {
        "source": series.source,
        "sum_rule_error": series.sum_rule_error(),
        "tau_c_plus": _finite(tp.tau_c),
        "tau_c_minus": _finite(tm.tau_c),
        "Omega_tau_c_plus": _finite(tp.omega_tau_c),
        "Omega_tau_c_minus": _finite(tm.omega_tau_c),
        "flags": {"plus_power_law": tp.power_law, "plus_unresolved": tp.unresolved,
                  "minus_power_law": tm.power_law, "minus_unresolved": tm.unresolved},
        "environment": env.label(),
    }
    _write_json(out / "correlations.json", summary)
    if cfg.plot_script:
        _plot_script(out, "correlations.csv", "t", ["K_plus", "K_minus"])
    return summary


def run_validate(out=None, names=None):
    from .validation import run_suite

    results = run_suite(names)
    report = {
        "passed": all(r.passed for r in results),
        "checks": [{"name": r.name, "passed": r.passed, "details": r.details} for r in results],
    }
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        _write_json(Path(out) / "validation.json", report)
    for r in results:
        print(r.line())
    return report


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [system], [environment], [run] sections")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--dt", type=float, help="time step (units of 1/J)")
    common.add_argument("--tfin", type=float, help="final time (units of 1/J)")
    p = argparse.ArgumentParser(prog="spinbath", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("trajectory", parents=[common], help="channel, rates and measures for one parameter point")
    sub.add_parser("phase-diagram", parents=[common], help="non-Markovianity over a Delta_h x Omega grid")
    sub.add_parser("correlations", parents=[common], help="environment correlation functions and kernels")
    v = sub.add_parser("validate", parents=[common], help="run the cross-engine and oracle checks")
    v.add_argument("--check", action="append", default=None, help="restrict to named checks")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = list(args.set)
    if args.dt is not None:
        overrides.append(f"run.dt={args.dt}")
    if args.tfin is not None:
        overrides.append(f"run.t_fin={args.tfin}")
    try:
        if args.command == "validate":
            if args.check:
                from .validation import CHECKS

                unknown = [c for c in args.check if c not in CHECKS]
                if unknown:
                    raise ConfigError(f"unknown checks {unknown}; available: {list(CHECKS)}")
            report = run_validate(args.out, args.check)
            return EXIT_OK if report["passed"] else EXIT_VALIDATION
        cfg = load_config(args.config, overrides)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.command == "trajectory":
            summary = run_trajectory(cfg, args.out)
            print(json.dumps({k: summary[k] for k in ("engine", "N_degree", "N_BLP")}, default=_json_default))
        elif args.command == "phase-diagram":
            rows = run_phase_diagram(cfg, args.out, jobs=args.jobs)
            print(f"wrote {len(rows)} grid points to {Path(args.out) / 'phase_diagram.csv'}")
        else:
            summary = run_correlations(cfg, args.out)
            print(json.dumps(summary, default=_json_default, sort_keys=True))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineCapabilityError as exc:
        print(f"engine refused: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
