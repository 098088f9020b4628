import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinbath.channel import rates_analytic, time_grid
from spinbath.dense import build_full_hamiltonian, excitation_number, tomography
from spinbath.model import EnvInitialState, SystemSpec, diagonalize_environment
from spinbath.sector import (
    BoundaryEchoWarning,
    evolve_single_mode_c,
    evolve_vacuum,
    frequency_analysis,
    sector_hamiltonian,
    sector_propagate,
)


def test_sector_matrix_n1():
    spec = SystemSpec(1, 0.3, 0.7, h=0.25)
    assert np.allclose(sector_hamiltonian(spec), [[0.7, 0.3], [0.3, 0.5]])


def test_sector_matrix_decoupled_is_diagonal():
    H = sector_hamiltonian(SystemSpec(8, 0.0, 0.2, m0=4))
    assert np.allclose(H, np.diag(np.diag(H)))


@pytest.mark.parametrize("m0", [1, 2, 4])
def test_sector_matrix_is_dense_projection(m0):
    spec = SystemSpec.from_detuning(4, 0.4, 0.3, m0=m0, h=0.1)
    H = build_full_hamiltonian(spec)
    all_down = 2**5 - 1
    # emitter up, then one chain site up
    states = [all_down ^ (1 << (4 - q)) for q in range(5)]
    assert np.all(excitation_number(5)[states] == 1)
    H1 = H[np.ix_(states, states)].real - H[all_down, all_down].real * np.eye(5)
    R = np.eye(5)
    R[1:, 1:] = diagonalize_environment(spec).W
    assert np.allclose(R @ H1 @ R.T, sector_hamiltonian(spec), atol=1e-12)


def test_vacuum_decoupled():
    traj = evolve_vacuum(SystemSpec(20, 0.0, 0.5, m0=10), time_grid(5, 0.1))
    assert np.allclose(traj.a, 1.0)
    assert np.allclose(traj.b, np.exp(-0.5j * traj.t))


@pytest.mark.parametrize("Omega", [0.2, 0.7])
def test_rabi_two_level(Omega):
    spec = SystemSpec.from_detuning(1, Omega, 0.0, h=0.3)
    t = time_grid(10, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryEchoWarning)
        traj = evolve_vacuum(spec, t)
    assert np.allclose(traj.a, np.cos(Omega * t) ** 2, atol=1e-12)


def test_vacuum_matches_dense_tomography():
    spec = SystemSpec.from_detuning(6, 0.4, 0.0, m0=3)
    t = time_grid(2.5, 0.05)
    sec = evolve_vacuum(spec, t)
    den = tomography(spec, EnvInitialState.vacuum(), t)
    for x, y in ((sec.a, den.a), (sec.b, den.b), (sec.c, den.c)):
        assert np.max(np.abs(x - y)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(N=st.integers(2, 40), Omega=st.floats(0.05, 1.5), Dh=st.floats(-3, 3))
def test_norm_conserved(N, Omega, Dh):
    spec = SystemSpec.from_detuning(N, Omega, Dh, m0=max(1, N // 2))
    psi0 = np.zeros(N + 1)
    psi0[0] = 1.0
    psi = sector_propagate(spec, psi0, np.linspace(0, 10, 11))
    assert np.allclose(np.linalg.norm(psi, axis=1), 1.0, atol=1e-12)


def test_converged_in_chain_length():
    t = time_grid(20, 0.05)
    a1 = evolve_vacuum(SystemSpec.from_detuning(200, 0.4, 0.0, m0=100), t).a
    a2 = evolve_vacuum(SystemSpec.from_detuning(400, 0.4, 0.0, m0=200), t).a
    assert np.max(np.abs(a1 - a2)) < 1e-6


def test_echo_warning():
    spec = SystemSpec.from_detuning(20, 0.4, 0.0, m0=10)
    with pytest.warns(BoundaryEchoWarning):
        traj = evolve_vacuum(spec, time_grid(20, 0.5))
    assert traj.meta["echo_exceeded"]


def test_single_mode_starts_empty():
    spec = SystemSpec.from_detuning(30, 0.4, 0.0, m0=15)
    c = evolve_single_mode_c(spec, 3, np.array([0.0, 0.5]))
    assert c[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        evolve_single_mode_c(spec, 31, np.array([0.0]))


@pytest.mark.parametrize("m0", [1, 25])
def test_single_mode_oscillates_at_bandwidth_half(m0):
    spec = SystemSpec.from_detuning(50, 0.4, 0.0, m0=m0)
    t = time_grid(25, 0.05)
    c = evolve_single_mode_c(spec, 50, t)
    assert frequency_analysis(c, 0.05).dominant == pytest.approx(2.0, rel=0.05)


def test_frequency_single_tone():
    t = time_grid(20, 0.05)
    peaks = frequency_analysis(np.cos(2 * t), 0.05)
    assert peaks.dominant == pytest.approx(2.0, rel=0.02)
    assert not peaks.low_resolution


def test_frequency_two_tones():
    t = time_grid(20, 0.05)
    peaks = frequency_analysis(np.cos(2 * t) + 0.1 * np.cos(4 * t), 0.05, n_peaks=2)
    assert sorted(peaks.frequencies) == pytest.approx([2.0, 4.0], rel=0.02)


def test_frequency_short_window_flag():
    t = time_grid(20, 0.05)
    peaks = frequency_analysis(np.cos(0.5 * t), 0.05, window=(0, 8), min_omega=0.1)
    assert peaks.low_resolution


def test_frequency_clipping_ignores_spikes():
    t = time_grid(40, 0.05)
    y = np.cos(4 * t)
    y[::97] += 200.0
    assert frequency_analysis(y, 0.05, clip_quantile=0.05).dominant == pytest.approx(4.0, rel=0.02)


def test_vacuum_decay_rate_oscillates_at_2J():
    spec = SystemSpec.from_detuning(300, 0.4, 0.0, m0=150)
    traj = evolve_vacuum(spec, time_grid(30, 0.05))
    g3 = rates_analytic(traj).gamma3
    assert frequency_analysis(g3, 0.05, window=(0, 30)).dominant == pytest.approx(2.0, rel=0.1)
