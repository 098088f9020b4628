"""Thermodynamic-limit vacuum amplitude from the emitter Green function.

``G(z) = 1 / (z - Delta - Sigma(z))`` is analytic in the upper half plane, so
the amplitude can be computed on the line ``Im z = eta`` for any ``eta > 0``
and multiplied by ``exp(eta t)``::

    C_e(t) = exp(eta t) (i / 2 pi) int dE G(E + i eta) exp(-i E t)

The free propagator ``1 / (z - Delta)`` is subtracted and added back
analytically so that the remaining integrand decays like ``E^-3``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec
from scipy.optimize import brentq

from .model import EngineCapabilityError, SystemSpec

__all__ = [
    "ResolventPoint",
    "BoundStateSet",
    "FrequencyLedger",
    "QuadratureError",
    "self_energy",
    "green_function",
    "resolvent_point",
    "vacuum_amplitude_tdl",
    "bound_states",
    "contribution_frequencies",
]

DEFAULT_ETA = 0.05


class QuadratureError(RuntimeError):
    pass


def _kind(spec: SystemSpec):
    if spec.m0 == 1:
        return "edge"
    if spec.is_center:
        return "center"
    raise EngineCapabilityError(f"no continuum self-energy for interior site m0={spec.m0}")


def self_energy(z, spec: SystemSpec):
    """Emitter self-energy of the semi-infinite (edge) or infinite (centre) chain.

    The square root is taken so that ``Sigma ~ Omega^2 / z`` at large ``|z|``
    and ``Im Sigma(E + i0) <= 0`` inside the band.  The band edges
    ``2h +- 2J`` are branch points where the centre form diverges; they
    return ``inf`` with a warning.
    """
    z = np.asarray(z, dtype=complex)
    w = z - 2.0 * spec.h
    J = spec.J
    at_edge = np.isclose(np.abs(w), 2 * J, rtol=0, atol=1e-14 * J) & (np.abs(w.imag) < 1e-14 * J)
    if np.any(at_edge):
        warnings.warn("self-energy evaluated at a band edge", RuntimeWarning, stacklevel=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        root = w * np.sqrt(1 - 4 * J**2 / w**2)
        if _kind(spec) == "center":
            sig = spec.Omega**2 / root
            sig = np.where(at_edge, np.inf + 0j, sig)
        else:
            sig = spec.Omega**2 * (w - root) / (2 * J**2)
    return sig[()] if sig.ndim == 0 else sig


def green_function(z, spec: SystemSpec):
    z = np.asarray(z, dtype=complex)
    return 1.0 / (z - spec.Delta - self_energy(z, spec))


@dataclass(frozen=True)
class ResolventPoint:
    z: complex
    sigma: complex
    green: complex


def resolvent_point(z, spec: SystemSpec) -> ResolventPoint:
    s = complex(self_energy(z, spec))
    return ResolventPoint(complex(z), s, 1.0 / (complex(z) - spec.Delta - s))


@dataclass(frozen=True)
class BoundStateSet:
    """Poles of ``G`` on the real axis outside the band."""

    energies: tuple
    sides: tuple
    residues: tuple = ()

    def __len__(self):
        return len(self.energies)

    def side(self, label):
        for E, s in zip(self.energies, self.sides):
            if s == label:
                return E
        return None


def bound_states(spec: SystemSpec) -> BoundStateSet:
    """Real roots of ``z - Delta - Sigma(z)`` above and below the band."""
    c, J = 2.0 * spec.h, spec.J

    def f(E):
        return (E - spec.Delta - self_energy(E, spec)).real

    far = 4 * J + abs(spec.Delta - c) + 2 * spec.Omega**2 / J + 1.0
    energies, sides, residues = [], [], []
    for sign, label in ((1, "upper"), (-1, "lower")):
        outer = c + sign * far
        inner = None
        for k in range(2, 17, 2):
            E = c + sign * (2 * J + 10.0 ** (-k) * J)
            if np.sign(f(E)) != np.sign(f(outer)):
                inner = E
                break
        if inner is None or spec.Omega == 0:
            continue
        lo, hi = sorted((inner, outer))
        root = brentq(f, lo, hi, xtol=1e-14 * J, rtol=4 * np.finfo(float).eps, maxiter=500)
        eps = 1e-6 * min(abs(root - c) - 2 * J, J)
        dsig = (self_energy(root + eps, spec) - self_energy(root - eps, spec)).real / (2 * eps)
        energies.append(root)
        sides.append(label)
        residues.append(1.0 / (1.0 - dsig))
    return BoundStateSet(tuple(energies), tuple(sides), tuple(residues))


def vacuum_amplitude_tdl(spec: SystemSpec, t_grid, eta=DEFAULT_ETA, cutoff=100.0, epsabs=1e-8, limit=4000):
    """Vacuum amplitude ``C_e(t)`` of an emitter on an infinite chain.

    Returns ``(C_e, info)`` where ``info`` records ``eta`` and the quadrature
    error estimate.  ``cutoff`` is the half width (in units of ``J``) of the
    energy window around the band centre.
    """
    t = np.asarray(t_grid, dtype=float)
    J = spec.J
    c = 2.0 * spec.h
    lo, hi = c - cutoff * J, c + cutoff * J
    z_shift = 1j * eta * J

    def integrand(E):
        z = E + z_shift
        g = green_function(z, spec) - 1.0 / (z - spec.Delta)
        ph = np.exp(-1j * E * t)
        return np.concatenate([(g * ph).real, (g * ph).imag])

    points = sorted({c - 2 * J, c + 2 * J, spec.Delta, *bound_states(spec).energies})
    points = [p for p in points if lo < p < hi]
    val, err = quad_vec(integrand, lo, hi, epsabs=epsabs, epsrel=0, limit=limit, points=points)
    n = len(t)
    integral = val[:n] + 1j * val[n:]
    if not np.isfinite(err) or err > 1e3 * epsabs * max(1.0, np.ptp(t)):
        raise QuadratureError(f"quadrature error estimate {err:.2e} over [{lo:g}, {hi:g}] with breakpoints {points}")
    Ce = np.exp(eta * J * t) * (1j / (2 * np.pi)) * integral + np.exp(-1j * spec.Delta * t)
    return Ce, {"eta": eta, "error_estimate": float(err), "cutoff": cutoff}


@dataclass(frozen=True)
class FrequencyLedger:
    """Characteristic frequencies of the amplitude and their pairwise beats."""

    frequencies: dict
    beats: dict = field(default_factory=dict)

    def beat(self, x, y) -> float:
        return self.beats.get((x, y), self.beats.get((y, x)))


def contribution_frequencies(spec: SystemSpec) -> FrequencyLedger:
    bs = bound_states(spec)
    freqs = {"resonant": spec.Delta, "edge+": 2 * spec.h + 2 * spec.J, "edge-": 2 * spec.h - 2 * spec.J}
    for E, side in zip(bs.energies, bs.sides):
        freqs["bound+" if side == "upper" else "bound-"] = E
    names = list(freqs)
    beats = {(x, y): abs(freqs[x] - freqs[y]) for i, x in enumerate(names) for y in names[i + 1:]}
    return FrequencyLedger(freqs, beats)
