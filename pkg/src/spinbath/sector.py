"""Exact dynamics in the single-excitation sector.

The basis is ``{|e,0>, |g,k>}`` with ``k`` running over chain modes.  One
eigendecomposition of the ``(N+1)``-dimensional sector matrix gives the
evolution at every time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelTrajectory
from .model import SystemSpec, diagonalize_environment

__all__ = [
    "BoundaryEchoWarning",
    "FrequencyPeaks",
    "sector_hamiltonian",
    "sector_propagate",
    "evolve_vacuum",
    "evolve_single_mode_c",
    "frequency_analysis",
]


class BoundaryEchoWarning(UserWarning):
    """Times beyond the return of waves reflected at the far chain end."""


def _echo_check(spec: SystemSpec, t_grid, horizon=None):
    horizon = spec.echo_time if horizon is None else horizon
    t_max = float(np.max(t_grid)) if len(t_grid) else 0.0
    if t_max > horizon:
        warnings.warn(
            f"t={t_max:g} exceeds the boundary echo time {horizon:g}; finite-chain reflections may appear",
            BoundaryEchoWarning,
            stacklevel=3,
        )
        return True
    return False


def sector_hamiltonian(spec: SystemSpec) -> np.ndarray:
    """Real symmetric sector matrix: diagonal ``(Delta, E_1..E_N)``, couplings ``Omega W_{m0,k}``."""
    basis = diagonalize_environment(spec)
    H = np.zeros((spec.N + 1, spec.N + 1))
    H[0, 0] = spec.Delta
    H[np.arange(1, spec.N + 1), np.arange(1, spec.N + 1)] = basis.E
    H[0, 1:] = spec.Omega * basis.W[spec.m0 - 1]
    H[1:, 0] = H[0, 1:]
    return H


def sector_propagate(spec: SystemSpec, psi0, t_grid) -> np.ndarray:
    """Amplitudes ``psi(t)`` for all times, shape ``(len(t_grid), N + 1)``."""
    w, V = np.linalg.eigh(sector_hamiltonian(spec))
    coeff = V.T @ np.asarray(psi0, dtype=complex)
    phases = np.exp(-1j * np.outer(t_grid, w))
    return (phases * coeff) @ V.T


def _overlap_series(spec, n_init, t_grid):
    # <e,0| e^{-iHt} |n_init> from one eigendecomposition
    w, V = np.linalg.eigh(sector_hamiltonian(spec))
    weights = V[0] * V[n_init]
    return np.exp(-1j * np.outer(t_grid, w)) @ weights


def evolve_vacuum(spec: SystemSpec, t_grid) -> ChannelTrajectory:
    """Vacuum-environment channel: ``a = |C_e|^2``, ``b = C_e``, ``c = 0``."""
    t_grid = np.asarray(t_grid, dtype=float)
    echo = _echo_check(spec, t_grid)
    Ce = _overlap_series(spec, 0, t_grid)
    meta = {"engine": "sector", "echo_horizon": spec.echo_time, "echo_exceeded": echo}
    return ChannelTrajectory(t_grid, np.abs(Ce) ** 2, Ce, np.zeros_like(t_grid), meta)


def evolve_single_mode_c(spec: SystemSpec, k, t_grid) -> np.ndarray:
    """``c(t) = |<e,0| e^{-iHt} |g,k>|^2`` for one initially occupied mode ``k``."""
    if not 1 <= k <= spec.N:
        raise ValueError(f"mode index {k} outside 1..{spec.N}")
    t_grid = np.asarray(t_grid, dtype=float)
    _echo_check(spec, t_grid)
    return np.abs(_overlap_series(spec, k, t_grid)) ** 2


@dataclass(frozen=True)
class FrequencyPeaks:
    """Dominant angular frequencies (descending amplitude) of a sampled series."""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    low_resolution: bool

    @property
    def dominant(self) -> float:
        return float(self.frequencies[0]) if len(self.frequencies) else float("nan")


def frequency_analysis(series, dt, window=None, t0=0.0, n_peaks=3, pad=8, min_omega=None,
                       clip_quantile=None) -> FrequencyPeaks:
    """Peaks of the windowed discrete Fourier spectrum.

    Parameters
    ----------
    series : array
        Uniformly sampled real values starting at time ``t0``.
    dt : float
        Sampling step.
    window : (float, float), optional
        Time interval to analyse; defaults to the whole series.
    n_peaks : int
        Number of local maxima to return.
    pad : int
        Zero-padding factor for finer frequency interpolation.
    min_omega : float, optional
        Ignore frequencies below this value (slow drifts).  Defaults to two
        frequency bins.
    clip_quantile : float, optional
        Winsorise the windowed series to its ``[q, 1 - q]`` quantiles before
        the transform.  Isolated spikes, e.g. of a rate ``-d log a/dt`` near
        zeros of ``a``, otherwise spread over all frequencies.

    Returns
    -------
    FrequencyPeaks
        Angular frequencies refined by parabolic interpolation.  The
        ``low_resolution`` flag is set when the window holds fewer than two
        periods of the dominant frequency.
    """
    y = np.asarray(series, dtype=float)
    t = t0 + dt * np.arange(len(y))
    if window is not None:
        keep = (t >= window[0] - 1e-9 * dt) & (t <= window[1] + 1e-9 * dt)
        y = y[keep]
    y = y[np.isfinite(y)]
    n = len(y)
    if n < 4:
        return FrequencyPeaks(np.array([]), np.array([]), True)
    if clip_quantile is not None:
        y = np.clip(y, *np.quantile(y, [clip_quantile, 1 - clip_quantile]))
    y = (y - y.mean()) * np.hanning(n)
    nfft = pad * n
    spec = np.abs(np.fft.rfft(y, nfft))
    omega = 2 * np.pi * np.fft.rfftfreq(nfft, dt)
    floor = 2 * (2 * np.pi / (n * dt)) if min_omega is None else min_omega
    interior = np.arange(1, len(spec) - 1)
    is_peak = (spec[interior] > spec[interior - 1]) & (spec[interior] >= spec[interior + 1]) & (omega[interior] >= floor)
    idx = interior[is_peak]
    idx = idx[np.argsort(spec[idx])[::-1]][:n_peaks]
    freqs, amps = [], []
    step = omega[1] - omega[0]
    for i in idx:
        l, c, r = np.log(spec[i - 1: i + 2] + 1e-300)
        denom = l - 2 * c + r
        shift = 0.5 * (l - r) / denom if denom != 0 else 0.0
        freqs.append(omega[i] + shift * step)
        amps.append(spec[i])
    freqs = np.array(freqs)
    low = len(freqs) == 0 or n * dt < 2 * (2 * np.pi / freqs[0])
    return FrequencyPeaks(freqs, np.array(amps), bool(low))
