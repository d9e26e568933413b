"""Qubit + optional probe + truncated bosonic modes, with a star-discretized bath.

Basis order is S (x) P (x) modes with S index 0 = e and 1 = g, so that
sigma_z = diag(1, -1) and H_S = omega(t) sigma_z / 2.  The mode basis holds all
occupation tuples with every entry <= fock_cutoff and, optionally, total
occupation <= max_excitations.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..bath import BathSpec
from ..errors import DimensionCapError

DEFAULT_DIM_CAP = 4096
DEFAULT_DISCRETIZATION_SPAN = 4.0
E, G = 0, 1


def discretize_bath(b: BathSpec, n_modes: int, span_widths: float = DEFAULT_DISCRETIZATION_SPAN):
    """Star discretization: uniform bins over omega0 +- span/tc, one mode per bin center.

    g_k^2 is the bin's share (1/2pi) int G_0 of the Lorentzian weight.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if not span_widths > 0:
        raise ValueError("span_widths must be > 0")
    lo = b.omega0 - span_widths * b.width
    hi = b.omega0 + span_widths * b.width
    if lo < 0:
        warnings.warn(f"discretization window starts below zero ({lo:.4g}); clamped to 0", RuntimeWarning, stacklevel=2)
        lo = 0.0
    edges = np.linspace(lo, hi, n_modes + 1)
    freqs = 0.5 * (edges[:-1] + edges[1:])
    area = np.diff(np.arctan((edges - b.omega0) * b.tc))
    g2 = b.eta**2 * area / (2.0 * math.pi)
    return freqs, np.sqrt(g2)


def mode_basis(n_modes: int, cutoff: int, max_excitations: int | None = None) -> np.ndarray:
    """Occupation tuples ordered lexicographically, as an (n_states, n_modes) int array."""
    states = [
        s for s in itertools.product(range(cutoff + 1), repeat=n_modes)
        if max_excitations is None or sum(s) <= max_excitations
    ]
    return np.array(states, dtype=np.int64).reshape(len(states), n_modes)


def mode_space_size(n_modes: int, cutoff: int, max_excitations: int | None = None) -> int:
    if max_excitations is None or max_excitations >= n_modes * cutoff:
        return (cutoff + 1) ** n_modes
    # count bounded compositions by dynamic programming
    ways = np.zeros(max_excitations + 1, dtype=object)
    ways[0] = 1
    for _ in range(n_modes):
        nxt = np.zeros_like(ways)
        for k in range(cutoff + 1):
            nxt[k:] += ways[: max_excitations + 1 - k]
        ways = nxt
    return int(sum(ways))


@dataclass(frozen=True)
class Pulse:
    """Smooth coupling pulse centred at t_m with width tau_m."""

    t_m: float
    tau_m: float
    half_window: float = 13.0  # area deficit pi exp(-2 half_window) < 1e-10

    def __post_init__(self):
        if not self.tau_m > 0:
            raise ValueError("tau_m must be > 0")

    @property
    def window(self):
        return self.t_m - self.half_window * self.tau_m, self.t_m + self.half_window * self.tau_m

    def h(self, t):
        x = (np.asarray(t, dtype=float) - self.t_m) / self.tau_m
        return (math.pi / (4.0 * self.tau_m)) * (np.tanh(x) ** 2 - 1.0)

    def area(self, t0: float, t1: float) -> float:
        """Exact int_{t0}^{t1} h(t) dt (infinite limits allowed)."""
        f = lambda t: -1.0 if t == -math.inf else 1.0 if t == math.inf else math.tanh((t - self.t_m) / self.tau_m)
        return -(math.pi / 4.0) * (f(t1) - f(t0))


@dataclass(frozen=True, eq=False)
class SupersystemModel:
    drive: object
    bath: BathSpec
    n_modes: int
    fock_cutoff: int
    include_probe: bool = False
    probe_freq: float | None = None
    pulse: Pulse | None = None
    span: float = DEFAULT_DISCRETIZATION_SPAN
    max_excitations: int | None = None
    dim_cap: int = DEFAULT_DIM_CAP
    probe_bath_coupling: float = 0.0
    mode_freqs: np.ndarray | None = field(default=None, repr=False)
    couplings: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_modes < 1 or self.fock_cutoff < 1:
            raise ValueError("n_modes and fock_cutoff must be >= 1")
        if self.max_excitations is not None and self.max_excitations < 1:
            raise ValueError("max_excitations must be >= 1")
        if self.pulse is not None and not self.include_probe:
            raise ValueError("a coupling pulse needs the probe")
        if self.probe_bath_coupling and not self.include_probe:
            raise ValueError("probe-bath coupling needs the probe")
        required = 2 * self.n_probe * mode_space_size(self.n_modes, self.fock_cutoff, self.max_excitations)
        if required > self.dim_cap:
            raise DimensionCapError(required, self.dim_cap)
        if (self.mode_freqs is None) != (self.couplings is None):
            raise ValueError("give both mode_freqs and couplings or neither")
        if self.mode_freqs is None:
            w, g = discretize_bath(self.bath, self.n_modes, self.span)
        else:
            w = np.asarray(self.mode_freqs, dtype=float)
            g = np.asarray(self.couplings, dtype=float)
            if w.shape != (self.n_modes,) or g.shape != (self.n_modes,):
                raise ValueError("mode_freqs and couplings need one entry per mode")
        w.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "mode_freqs", w)
        object.__setattr__(self, "couplings", g)

    @property
    def n_probe(self) -> int:
        return 2 if self.include_probe else 1

    @cached_property
    def modes(self) -> np.ndarray:
        return mode_basis(self.n_modes, self.fock_cutoff, self.max_excitations)

    @property
    def n_bath(self) -> int:
        return self.modes.shape[0]

    @property
    def dims(self):
        return 2, self.n_probe, self.n_bath

    @property
    def dim(self) -> int:
        return 2 * self.n_probe * self.n_bath

    # --- operators on the bath factor ---------------------------------
    @cached_property
    def bath_energy(self) -> np.ndarray:
        """Diagonal of H_B = sum_k w_k a_k^dag a_k."""
        return self.modes @ self.mode_freqs

    @cached_property
    def _raising(self):
        """(lower, upper, mode, sqrt(n+1)) for every pair of states one quantum apart."""
        index = {tuple(s): i for i, s in enumerate(self.modes)}
        out = []
        for i, s in enumerate(self.modes):
            for k in range(self.n_modes):
                up = s.copy()
                up[k] += 1
                j = index.get(tuple(up))
                if j is not None:
                    out.append((i, j, k, math.sqrt(s[k] + 1)))
        if not out:
            return np.zeros((0, 4))
        return np.array(out)

    @cached_property
    def bath_coupling(self) -> sparse.csr_matrix:
        """B = sum_k g_k (a_k + a_k^dag) on the mode basis."""
        r = self._raising
        lo, up, k = r[:, 0].astype(int), r[:, 1].astype(int), r[:, 2].astype(int)
        v = self.couplings[k] * r[:, 3]
        n = self.n_bath
        m = sparse.coo_matrix((np.r_[v, v], (np.r_[up, lo], np.r_[lo, up])), shape=(n, n)).tocsr()
        m.eliminate_zeros()
        return m

    # --- full-space operators -----------------------------------------
    def _full(self, s_op, p_op, b_op) -> sparse.csr_matrix:
        return sparse.kron(sparse.kron(sparse.csr_matrix(s_op), sparse.csr_matrix(p_op)), b_op, format="csr")

    @cached_property
    def sigma_z(self) -> sparse.csr_matrix:
        return self._full(np.diag([1.0, -1.0]), np.eye(self.n_probe), sparse.identity(self.n_bath))

    @cached_property
    def H_B(self) -> sparse.csr_matrix:
        return self._full(np.eye(2), np.eye(self.n_probe), sparse.diags(self.bath_energy))

    @cached_property
    def H_SB(self) -> sparse.csr_matrix:
        return self._full(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(self.n_probe), self.bath_coupling)

    @cached_property
    def H_BP(self) -> sparse.csr_matrix:
        """Optional probe dephasing kappa sigma_z^P (x) B (zero unless configured)."""
        if not self.include_probe:
            return sparse.csr_matrix((self.dim, self.dim))
        return self.probe_bath_coupling * self._full(np.eye(2), np.diag([1.0, -1.0]), self.bath_coupling)

    @cached_property
    def pulse_generator(self) -> sparse.csr_matrix:
        """A = |e><e| (x) (I - sigma_x^P); H_SP(t) = h(t) A."""
        if not self.include_probe:
            raise ValueError("model has no probe")
        return self._full(np.diag([1.0, 0.0]), np.array([[1.0, -1.0], [-1.0, 1.0]]), sparse.identity(self.n_bath))

    def H_S(self, omega: float) -> sparse.csr_matrix:
        return (0.5 * omega) * self.sigma_z

    def static_part(self) -> sparse.csr_matrix:
        return (self.H_B + self.H_SB + self.H_BP).tocsr()

    def hamiltonian(self, t: float) -> sparse.csr_matrix:
        """H_S(t) + H_B + H_SB (+ H_BP); the pulse term is handled by the propagators."""
        return (self.H_S(self.drive.omega(t)) + self.static_part()).tocsr()

    @cached_property
    def sectors(self) -> list[np.ndarray]:
        """Index sets of the blocks left invariant by every H(t) without the pulse."""
        pattern = abs(self.static_part()) + abs(self.sigma_z)
        n, labels = connected_components(pattern, directed=False)
        return [np.flatnonzero(labels == c) for c in range(n)]

    @cached_property
    def sp_coherence_pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Rows (e,1,n), columns (g,0,n +- 1_k) and weights of the tracked S-P coherence.

        The weights are the matrix elements of the collective bath coordinate
        B / |g|, so the weighted sum follows the correlations the bath can
        dephase.  Structural weights sqrt(n+1) are used when all g_k vanish.
        """
        if not self.include_probe:
            z = np.zeros(0, dtype=np.int64)
            return z, z, np.zeros(0)
        nb = self.n_bath
        r = self._raising
        lo, up, k = r[:, 0].astype(np.int64), r[:, 1].astype(np.int64), r[:, 2].astype(np.int64)
        norm = float(np.linalg.norm(self.couplings))
        w = self.couplings[k] * r[:, 3] / norm if norm > 0 else r[:, 3] / math.sqrt(self.n_modes)
        rows = (E * 2 + 1) * nb + np.r_[lo, up]
        cols = (G * 2 + 0) * nb + np.r_[up, lo]
        return rows, cols, np.r_[w, w]
