import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinbath.channel import time_grid
from spinbath.model import EngineCapabilityError, SystemSpec
from spinbath.resolvent import (
    bound_states,
    contribution_frequencies,
    green_function,
    resolvent_point,
    self_energy,
    vacuum_amplitude_tdl,
)
from spinbath.sector import evolve_vacuum


def centre(Omega=0.4, Dh=0.0, h=0.0, N=400):
    return SystemSpec.from_detuning(N, Omega, Dh, m0=N // 2, h=h)


def test_self_energy_outside_band():
    spec = centre(h=0.3)
    assert self_energy(0.6 + 3.0, spec) == pytest.approx(0.16 / np.sqrt(5))
    assert self_energy(0.6 - 3.0, spec) == pytest.approx(-0.16 / np.sqrt(5))


def test_self_energy_band_centre_is_retarded():
    spec = centre()
    assert self_energy(1e-12j, spec) == pytest.approx(-0.08j, abs=1e-10)
    E = np.linspace(-1.9, 1.9, 39)
    assert np.all(self_energy(E + 1e-12j, spec).imag < 0)


def test_self_energy_continuous_in_imaginary_part():
    spec = centre()
    for x in (0.5, 1.5, 2.5):
        eta = np.geomspace(1e-9, 1e-3, 30)
        vals = self_energy(x + 1j * eta, spec)
        assert np.max(np.abs(np.diff(vals))) < 1e-3


def test_self_energy_edge_flagged():
    with pytest.warns(RuntimeWarning):
        assert np.isinf(self_energy(2.0, centre()))


def test_self_energy_refuses_interior_site():
    with pytest.raises(EngineCapabilityError):
        self_energy(3.0, SystemSpec(100, 0.4, 0.0, m0=10))


def test_edge_self_energy_asymptotics():
    spec = SystemSpec(100, 0.4, 0.0, m0=1)
    z = 1e4 + 0.5j
    assert self_energy(z, spec) == pytest.approx(0.16 / z, rel=1e-6)
    assert self_energy(1e-12j, spec) == pytest.approx(-0.16j, abs=1e-10)


def test_resolvent_point_consistent():
    spec = centre(Dh=0.3)
    p = resolvent_point(1.0 + 0.1j, spec)
    assert p.green == pytest.approx(1 / (p.z - spec.Delta - p.sigma))
    assert p.green == pytest.approx(green_function(1.0 + 0.1j, spec))


def test_bound_states_closed_form_at_zero_detuning():
    Omega = 0.4
    bs = bound_states(centre(Omega))
    assert len(bs) == 2
    exact = np.sqrt(2 + np.sqrt(4 + Omega**4))
    assert bs.side("upper") == pytest.approx(exact, abs=1e-12)
    assert bs.side("lower") == pytest.approx(-exact, abs=1e-12)
    assert bs.side("upper") + bs.side("lower") == pytest.approx(0.0, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(Omega=st.floats(0.01, 3.0), Dh=st.floats(-4, 4), h=st.floats(-1, 1))
def test_centre_coupling_always_two_bound_states(Omega, Dh, h):
    spec = centre(Omega, Dh, h)
    bs = bound_states(spec)
    assert len(bs) == 2
    for E in bs.energies:
        assert abs(E - 2 * h) > 2
        # near the edge the residual is limited by the float spacing of E times the slope
        eps = 1e-3 * min(1.0, abs(abs(E - 2 * h) - 2))
        slope = abs((self_energy(E + eps, spec) - self_energy(E - eps, spec)) / (2 * eps))
        floor = 4 * np.finfo(float).eps * max(1.0, abs(E)) * (1 + slope)
        assert abs(E - spec.Delta - self_energy(E, spec)) < 1e-10 + floor


def test_bound_states_approach_band_edges():
    bs = bound_states(centre(Omega=1e-3))
    assert bs.side("upper") == pytest.approx(2.0, abs=1e-4)
    assert bs.side("lower") == pytest.approx(-2.0, abs=1e-4)


def test_amplitude_sum_rule():
    Ce, info = vacuum_amplitude_tdl(centre(), np.array([0.0]))
    assert abs(Ce[0] - 1) < 1e-3
    assert info["eta"] > 0


def test_amplitude_matches_large_chain():
    spec = centre()
    t = time_grid(20, 0.25)
    Ce, _ = vacuum_amplitude_tdl(spec, t)
    assert np.max(np.abs(Ce - evolve_vacuum(spec, t).b)) < 1e-3


def test_amplitude_eta_robust():
    t = time_grid(20, 0.5)
    c1, _ = vacuum_amplitude_tdl(centre(), t, eta=0.05)
    c2, _ = vacuum_amplitude_tdl(centre(), t, eta=0.025)
    assert np.max(np.abs(np.abs(c1) - np.abs(c2))) < 1e-3


def test_band_edge_incomplete_decay():
    t = np.linspace(30, 60, 7)
    Ce, _ = vacuum_amplitude_tdl(centre(Dh=-2.0), t)
    pop = np.abs(Ce) ** 2
    assert pop.min() > 0.05
    # the plateau is the sum of bound-state weights, with beats between them
    res = bound_states(centre(Dh=-2.0)).residues
    assert pop.mean() == pytest.approx(sum(r**2 for r in res), rel=0.3)


def test_frequency_ledger():
    led = contribution_frequencies(centre(Omega=0.05))
    assert led.beat("resonant", "edge+") == pytest.approx(2.0)
    assert led.beat("edge-", "resonant") == pytest.approx(2.0)
    assert led.beat("edge+", "edge-") == pytest.approx(4.0)
    led = contribution_frequencies(centre(Omega=0.4))
    for side in ("bound+", "bound-"):
        assert led.beat("resonant", side) == pytest.approx(2.0, rel=0.1)
    assert all(np.isreal(v) for v in led.frequencies.values())
