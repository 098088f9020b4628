"""Brute-force evolution of the emitter plus a short chain.

Qubit 0 is the emitter and occupies the most significant bit of the basis
index; qubits ``1..N`` are the chain sites.  Bit value 0 is spin up, so for
every qubit index 0 is the excited state, matching the ``(e, g)`` ordering
used for the emitter elsewhere.

The Hamiltonian conserves the number of up spins, so it is diagonalised one
excitation sector at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blp import EXCITED, GROUND, X_PLUS, Y_PLUS, BlochState
from .channel import ChannelTrajectory
from .model import EngineCapabilityError, EnvInitialState, SystemSpec, diagonalize_environment

__all__ = [
    "DEFAULT_CAP",
    "SectorEigen",
    "build_full_hamiltonian",
    "build_chain_hamiltonian",
    "excitation_number",
    "sector_eigensystem",
    "thermal_env_density",
    "ground_env_density",
    "env_density",
    "annihilation_operator",
    "string_operator",
    "correlation_dense_trace",
    "evolve_full",
    "tomography",
]

DEFAULT_CAP = 10


def _check_cap(N, cap):
    cap = DEFAULT_CAP if cap is None else cap
    if N > cap:
        mem = 16 * 4 ** (N + 1) / 2**20
        raise EngineCapabilityError(
            f"dense engine limited to N <= {cap} (N={N} needs ~{mem:.0f} MiB per operator); raise the cap explicitly"
        )


def _xy_matrix(n_qubits, hops, fields):
    """Spin-conserving matrix from hopping pairs ``(p, q, amp)`` and fields ``(p, eps)``.

    A field term adds ``eps`` when qubit ``p`` is up; a hopping term is
    ``amp (s+_p s-_q + s-_p s+_q)``.
    """
    dim = 2**n_qubits
    idx = np.arange(dim)
    H = np.zeros((dim, dim))

    def bit(p):
        return (idx >> (n_qubits - 1 - p)) & 1

    for p, eps in fields:
        H[idx, idx] += eps * (bit(p) == 0)
    for p, q, amp in hops:
        differ = bit(p) != bit(q)
        src = idx[differ]
        dst = src ^ ((1 << (n_qubits - 1 - p)) | (1 << (n_qubits - 1 - q)))
        H[dst, src] += amp
    return H


def build_chain_hamiltonian(N, J=1.0, h=0.0, cap=None) -> np.ndarray:
    """``sum J/2 (XX + YY) + h sum Z`` on ``N`` sites (site 1 most significant)."""
    _check_cap(N, cap)
    H = _xy_matrix(N, [(i, i + 1, J) for i in range(N - 1)], [(i, 2.0 * h) for i in range(N)])
    return H - h * N * np.eye(2**N)


def build_full_hamiltonian(spec: SystemSpec, cap=None) -> np.ndarray:
    """Emitter plus chain Hamiltonian in the spin representation."""
    _check_cap(spec.N, cap)
    N = spec.N
    hops = [(i, i + 1, spec.J) for i in range(1, N)] + [(0, spec.m0, spec.Omega)]
    fields = [(0, spec.Delta)] + [(i, 2.0 * spec.h) for i in range(1, N + 1)]
    return _xy_matrix(N + 1, hops, fields) - spec.h * N * np.eye(2 ** (N + 1))


def excitation_number(n_qubits) -> np.ndarray:
    """Number of up spins for every basis index."""
    idx = np.arange(2**n_qubits)
    ones = np.array([bin(i).count("1") for i in idx])
    return n_qubits - ones


@dataclass
class SectorEigen:
    """Eigensystem of a number-conserving matrix, one entry per sector."""

    indices: list
    energies: list
    vectors: list

    def __len__(self):
        return len(self.indices)


def sector_eigensystem(H, n_qubits) -> SectorEigen:
    n_up = excitation_number(n_qubits)
    inds, ens, vecs = [], [], []
    for n in range(n_qubits + 1):
        sel = np.flatnonzero(n_up == n)
        w, V = np.linalg.eigh(H[np.ix_(sel, sel)])
        inds.append(sel)
        ens.append(w)
        vecs.append(V)
    return SectorEigen(inds, ens, vecs)


def _gibbs_from_eigen(eig: SectorEigen, dim, beta):
    emin = min(w.min() for w in eig.energies)
    rho = np.zeros((dim, dim))
    Z = 0.0
    for sel, w, V in zip(eig.indices, eig.energies, eig.vectors):
        p = np.exp(-beta * (w - emin))
        Z += p.sum()
        rho[np.ix_(sel, sel)] = (V * p) @ V.T
    return rho / Z


def thermal_env_density(spec: SystemSpec, beta, cap=None) -> np.ndarray:
    """Gibbs state of the chain at inverse temperature ``beta``."""
    H = build_chain_hamiltonian(spec.N, spec.J, spec.h, cap=cap)
    return _gibbs_from_eigen(sector_eigensystem(H, spec.N), 2**spec.N, beta)


def ground_env_density(spec: SystemSpec, h_prep, cap=None, degeneracy_tol=1e-9) -> np.ndarray:
    """Equal mixture over the ground manifold of the chain at field ``h_prep``."""
    H = build_chain_hamiltonian(spec.N, spec.J, h_prep, cap=cap)
    eig = sector_eigensystem(H, spec.N)
    emin = min(w.min() for w in eig.energies)
    dim = 2**spec.N
    rho = np.zeros((dim, dim))
    for sel, w, V in zip(eig.indices, eig.energies, eig.vectors):
        keep = w <= emin + degeneracy_tol
        if keep.any():
            rho[np.ix_(sel, sel)] += V[:, keep] @ V[:, keep].T
    return rho / np.trace(rho)


def env_density(spec: SystemSpec, env: EnvInitialState, cap=None) -> np.ndarray:
    dim = 2**spec.N
    _check_cap(spec.N, cap)
    if env.kind == "vacuum":
        rho = np.zeros((dim, dim))
        rho[-1, -1] = 1.0  # all spins down
        return rho
    if env.kind == "thermal":
        return thermal_env_density(spec, env.beta, cap=cap)
    if env.kind == "ground":
        return ground_env_density(spec, env.h_prep, cap=cap)
    if env.k > spec.N:
        raise ValueError(f"mode index {env.k} exceeds chain length {spec.N}")
    W = diagonalize_environment(spec).W
    psi = np.zeros(dim)
    down = dim - 1
    for i in range(spec.N):
        psi[down ^ (1 << (spec.N - 1 - i))] = W[env.k - 1, i]
    return np.outer(psi, psi)


def annihilation_operator(N, i) -> np.ndarray:
    """Jordan-Wigner fermion ``c_i = prod_{j<i}(-Z_j) s-_i`` on ``N`` sites, ``i`` 1-based."""
    sm = np.array([[0, 0], [1, 0]], dtype=float)
    mz = np.diag([-1.0, 1.0])
    op = np.array([[1.0]])
    for j in range(1, N + 1):
        op = np.kron(op, mz if j < i else sm if j == i else np.eye(2))
    return op


def string_operator(N, i) -> np.ndarray:
    """Jordan-Wigner parity string ``prod_{j<i}(-Z_j)`` on ``N`` sites (diagonal)."""
    d = np.ones(1)
    for j in range(1, N + 1):
        d = np.kron(d, np.array([-1.0, 1.0]) if j < i else np.ones(2))
    return np.diag(d)


def correlation_dense_trace(spec: SystemSpec, beta, t_grid, cap=None):
    """Brute-force ``alpha+-(t)`` in the full ``2^N`` chain space.

    Returns the pair ``(alpha_plus, alpha_minus)`` as complex arrays.
    """
    N, m = spec.N, spec.m0
    H = build_chain_hamiltonian(N, spec.J, spec.h, cap=cap)
    rho = thermal_env_density(spec, beta, cap=cap)
    c = annihilation_operator(N, m)
    u = string_operator(N, m)
    w, V = np.linalg.eigh(H)
    # rotate everything into the eigenbasis once
    rho_b, c_b, u_b = (V.T @ X @ V for X in (rho, c, u))
    left_p = rho_b @ c_b.T @ u_b
    left_m = rho_b @ c_b @ u_b
    mid_p = u_b @ c_b
    mid_m = u_b @ c_b.T
    ap, am = [], []
    for ti in np.asarray(t_grid, dtype=float):
        ph = np.exp(-1j * w * ti)
        # tr(L e^{-iHt} X e^{iHt}) with diagonal propagators
        ap.append(np.sum(left_p.T * (ph[:, None] * mid_p * ph.conj()[None, :])))
        am.append(np.sum(left_m.T * (ph[:, None] * mid_m * ph.conj()[None, :])))
    return np.array(ap), np.array(am)


def _reduced_series(eig: SectorEigen, rho0, observables, t_grid):
    """``tr(O rho(t))`` for each observable ``O`` via sector-pair sums."""
    phases = [np.exp(-1j * np.outer(t_grid, w)) for w in eig.energies]
    out = np.zeros((len(observables), len(t_grid)), dtype=complex)
    n = len(eig)
    for p in range(n):
        sp, Vp = eig.indices[p], eig.vectors[p]
        for q in range(n):
            block = rho0[np.ix_(sp, eig.indices[q])]
            if not np.any(block):
                continue
            Vq = eig.vectors[q]
            A = Vp.conj().T @ block @ Vq
            for k, O in enumerate(observables):
                ob = O[np.ix_(eig.indices[q], sp)]
                if not np.any(ob):
                    continue
                B = Vq.conj().T @ ob @ Vp
                X = A * B.T
                out[k] += np.einsum("tm,mn,tn->t", phases[p], X, phases[q].conj(), optimize=True)
    return out


class _DenseSystem:
    def __init__(self, spec: SystemSpec, env: EnvInitialState, cap=None):
        self.spec = spec
        self.rho_E = env_density(spec, env, cap=cap)
        H = build_full_hamiltonian(spec, cap=cap)
        self.eig = sector_eigensystem(H, spec.N + 1)
        dE = 2**spec.N
        eye = np.eye(dE)
        # observables |j><i| (x) 1 give rho_ij
        self.obs = {}
        for i in range(2):
            for j in range(2):
                op = np.zeros((2, 2))
                op[j, i] = 1.0
                self.obs[(i, j)] = np.kron(op, eye)

    def evolve(self, rho_S, t_grid):
        rho0 = np.kron(rho_S, self.rho_E)
        keys = [(0, 0), (0, 1), (1, 0), (1, 1)]
        vals = _reduced_series(self.eig, rho0, [self.obs[k] for k in keys], t_grid)
        rho = np.zeros((len(t_grid), 2, 2), dtype=complex)
        for (i, j), v in zip(keys, vals):
            rho[:, i, j] = v
        return rho


def evolve_full(spec: SystemSpec, env: EnvInitialState, system_init: BlochState, t_grid, cap=None) -> np.ndarray:
    """Reduced emitter states ``rho(t)``, shape ``(len(t_grid), 2, 2)``."""
    t_grid = np.asarray(t_grid, dtype=float)
    return _DenseSystem(spec, env, cap=cap).evolve(system_init.density_matrix(), t_grid)


def tomography(spec: SystemSpec, env: EnvInitialState, t_grid, cap=None, block_tol=1e-9) -> ChannelTrajectory:
    """Channel elements from runs with the emitter in ``e``, ``g``, ``x+`` and ``y+``.

    The ``y+`` run and the off-block entries of the other runs check the
    excitation-conserving form; violations raise ``RuntimeError``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    sys = _DenseSystem(spec, env, cap=cap)
    re, rg, rx, ry = (sys.evolve(s.density_matrix(), t_grid) for s in (EXCITED, GROUND, X_PLUS, Y_PLUS))
    a = re[:, 0, 0].real
    c = rg[:, 0, 0].real
    b = 2 * rx[:, 0, 1]
    b_y = 2j * ry[:, 0, 1]
    deviation = max(
        np.max(np.abs(b - b_y)),
        np.max(np.abs(re[:, 0, 1])),
        np.max(np.abs(rg[:, 0, 1])),
        np.max(np.abs(rx[:, 0, 0] - 0.5 * (a + c))),
    )
    if deviation > block_tol:
        raise RuntimeError(f"channel is not excitation conserving (deviation {deviation:.2e})")
    meta = {"engine": "dense", "env": env.label(), "block_deviation": float(deviation),
            "echo_horizon": spec.echo_time}
    return ChannelTrajectory(t_grid, a, b, c, meta)
