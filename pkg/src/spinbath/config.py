"""Run configuration: INI-style files with ``[system]``, ``[environment]`` and ``[run]``.

Every key can be overridden with ``KEY=VALUE`` strings, either qualified
(``system.Omega=0.4``) or bare when the key name is unique.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import EnvInitialState, SystemSpec

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config", "parse_grid"]


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "system": {"N": "300", "Omega": "0.4", "Delta_h": "0.0", "m0": "center", "J": "1.0", "h": "0.0"},
    "environment": {"kind": "vacuum", "beta": "", "h_prep": "", "k": ""},
    "run": {
        "engine": "auto",
        "t_fin": "20.0",
        "dt": "0.05",
        "branch_window": "2",
        "convergence": "true",
        "thermodynamic_limit": "false",
        "dense_cap": "10",
        "plot_script": "false",
        "Delta_h_grid": "-3:3:25",
        "Omega_grid": "0.2:1.0:5",
    },
}

ENGINES = ("auto", "sector", "dense", "gaussian", "analytic")


def parse_grid(text):
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be start:stop:num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(start, stop, num)
    return np.array([float(x) for x in text.split(",") if x.strip()])


@dataclass
class RunConfig:
    spec: SystemSpec
    env: EnvInitialState
    engine: str = "auto"
    t_fin: float = 20.0
    dt: float = 0.05
    branch_window: int = 2
    convergence: bool = True
    thermodynamic_limit: bool = False
    dense_cap: int = 10
    plot_script: bool = False
    Delta_h_grid: np.ndarray = field(default_factory=lambda: parse_grid(DEFAULTS["run"]["Delta_h_grid"]))
    Omega_grid: np.ndarray = field(default_factory=lambda: parse_grid(DEFAULTS["run"]["Omega_grid"]))
    raw: dict = field(default_factory=dict)


def _apply_override(parser, item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not KEY=VALUE")
    key, value = item.split("=", 1)
    key = key.strip()
    if "." in key:
        section, name = key.split(".", 1)
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section {section!r}")
    else:
        owners = [s for s in DEFAULTS if any(k.lower() == key.lower() for k in DEFAULTS[s])]
        if len(owners) != 1:
            raise ConfigError(f"unknown or ambiguous key {key!r}")
        section, name = owners[0], key
    if not any(k.lower() == name.lower() for k in DEFAULTS[section]):
        raise ConfigError(f"unknown key {section}.{name}")
    parser[section][name] = value.strip()


def _boolean(section, key):
    try:
        return section.getboolean(key)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def load_config(path=None, overrides=()) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str.lower
    parser.read_dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        extra = set(parser.sections()) - set(DEFAULTS)
        if extra:
            raise ConfigError(f"unknown sections {sorted(extra)}")
    for item in overrides:
        _apply_override(parser, item)
    sysc, envc, runc = parser["system"], parser["environment"], parser["run"]
    try:
        N = int(sysc["n"])
        m0_text = sysc["m0"].strip().lower()
        m0 = max(1, N // 2) if m0_text in ("center", "centre") else int(m0_text)
        spec = SystemSpec.from_detuning(N, float(sysc["omega"]), float(sysc["delta_h"]), m0=m0,
                                        J=float(sysc["j"]), h=float(sysc["h"]))
        kind = envc["kind"].strip().lower()
        if kind == "vacuum":
            env = EnvInitialState.vacuum()
        elif kind == "thermal":
            env = EnvInitialState.thermal(float(envc["beta"]))
        elif kind == "ground":
            env = EnvInitialState.ground(float(envc["h_prep"]))
        elif kind == "single_mode":
            env = EnvInitialState.single_mode(int(envc["k"]))
        else:
            raise ConfigError(f"unknown environment kind {kind!r}")
        engine = runc["engine"].strip().lower()
        if engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        cfg = RunConfig(
            spec=spec,
            env=env,
            engine=engine,
            t_fin=float(runc["t_fin"]),
            dt=float(runc["dt"]),
            branch_window=int(runc["branch_window"]),
            convergence=_boolean(runc, "convergence"),
            thermodynamic_limit=_boolean(runc, "thermodynamic_limit"),
            dense_cap=int(runc["dense_cap"]),
            plot_script=_boolean(runc, "plot_script"),
            Delta_h_grid=parse_grid(runc["delta_h_grid"]),
            Omega_grid=parse_grid(runc["omega_grid"]),
            raw={s: dict(parser[s]) for s in DEFAULTS},
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.dt <= 0 or cfg.t_fin <= 0:
        raise ConfigError("dt and t_fin must be positive")
    return cfg
