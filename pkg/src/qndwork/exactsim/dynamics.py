"""Time-ordered propagation of the supersystem with a classical piston ledger.

The Hamiltonian is held constant over each step at its midpoint value.  The
piston is charged exactly at the step boundaries, where the splitting jumps
from one piecewise value to the next, so that

    E_S + E_B + E_SB + E_piston

is conserved by the discretized dynamics to round-off.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import ConvergenceError
from .model import SupersystemModel
from .states import DensityOperator

TRACE_COLUMNS = ("t", "E_S", "E_B", "E_SB", "E_piston", "sp_coherence")
DEFAULT_STEP_TOL = 1e-8
MAX_HALVINGS = 30


@dataclass(frozen=True)
class EnergyTrace:
    t_grid: np.ndarray
    E_S: np.ndarray
    E_B: np.ndarray
    E_SB: np.ndarray
    E_piston: np.ndarray
    sp_coherence: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.E_S + self.E_B + self.E_SB + self.E_piston

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in zip(*(getattr(self, c if c != "t" else "t_grid") for c in TRACE_COLUMNS)):
            w.writerow([format(float(v), ".17g") for v in row])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)


class _SectorExp:
    """exp(-i H dt) assembled from eigendecompositions of the invariant blocks."""

    def __init__(self, m: SupersystemModel):
        self.m = m
        self.static = m.static_part().toarray()
        self.z = m.sigma_z.diagonal()
        self.sectors = m.sectors
        self._cache: dict = {}

    def _eig(self, block):
        key = hashlib.sha1(block.tobytes()).hexdigest() + str(block.shape)
        hit = self._cache.get(key)
        if hit is None:
            hit = linalg.eigh(block)
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def blocks(self, omega: float, dt: float) -> list[np.ndarray]:
        """Per-sector blocks of exp(-i H(omega) dt)."""
        out = []
        for idx in self.sectors:
            block = self.static[np.ix_(idx, idx)] + np.diag(0.5 * omega * self.z[idx])
            lam, V = self._eig(block)
            out.append((V * np.exp(-1j * lam * dt)) @ V.conj().T)
        return out

    def unitary(self, omega: float, dt: float) -> np.ndarray:
        n = self.m.dim
        U = np.zeros((n, n), dtype=complex)
        for idx, u in zip(self.sectors, self.blocks(omega, dt)):
            U[np.ix_(idx, idx)] = u
        return U

    def evolve(self, blocks, rho) -> np.ndarray:
        """U rho U^dag with block-diagonal U; exactly vanishing blocks of rho are skipped."""
        out = np.zeros_like(rho)
        for i, (a, ua) in enumerate(zip(self.sectors, blocks)):
            for b, ub in zip(self.sectors[i:], blocks[i:]):
                r = rho[np.ix_(a, b)]
                if not r.any():
                    continue
                v = ua @ r @ ub.conj().T
                out[np.ix_(a, b)] = v
                if b is not a:
                    out[np.ix_(b, a)] = v.conj().T
        return out


def _evolve(U, rho):
    return U @ rho @ U.conj().T


class _Observer:
    def __init__(self, m: SupersystemModel):
        self.z = m.sigma_z.diagonal().real
        self.hb = m.H_B.diagonal().real
        self.hsb = (m.H_SB + m.H_BP).tocsr()
        self.pairs = m.sp_coherence_pairs

    def energies(self, rho, omega):
        d = np.real(np.diagonal(rho))
        s = 0.5 * float(d @ self.z)
        e_sb = float(np.real(self.hsb.multiply(rho.T).sum()))
        return omega * s, float(d @ self.hb), e_sb, s

    def coherence(self, rho):
        r, c, w = self.pairs
        return float(abs(np.dot(w, rho[r, c]))) if r.size else 0.0


class _Recorder:
    def __init__(self, obs: _Observer, drive, t0, rho):
        self.obs = obs
        self.drive = drive
        self.rows = []
        self.piston = 0.0
        self.omega = float(drive.omega(t0))  # splitting currently in force
        self.record(t0, rho)

    def jump(self, omega_new, rho):
        """Charge the piston for a sudden change of the splitting at fixed state."""
        s = self.obs.energies(rho, 0.0)[3]
        self.piston -= (omega_new - self.omega) * s
        self.omega = omega_new

    def record(self, t, rho):
        self.jump(float(self.drive.omega(t)), rho)
        e_s, e_b, e_sb, _ = self.obs.energies(rho, self.omega)
        self.rows.append((t, e_s, e_b, e_sb, self.piston, self.obs.coherence(rho)))

    def trace(self) -> EnergyTrace:
        a = np.array(self.rows).T
        return EnergyTrace(*a)


def _step_error(obs, rho_a, rho_b, omega):
    ea = obs.energies(rho_a, omega)
    eb = obs.energies(rho_b, omega)
    return max(abs(x - y) for x, y in zip(ea[:3], eb[:3]))


def propagate(
    m: SupersystemModel,
    rho: DensityOperator,
    t0: float,
    t1: float,
    dt_max: float,
    *,
    tol: float = DEFAULT_STEP_TOL,
    record_times=None,
):
    """Evolve rho from t0 to t1 under H(t) without the pulse term.

    Steps start at ``dt_max`` and are halved until one step and two half steps
    agree on E_S, E_B and E_SB within ``tol``; the finer result is kept.
    Returns the final state and an :class:`EnergyTrace` sampled at every
    accepted step (and at ``record_times`` if given).  ``E_piston`` is the work
    delivered to the piston since ``t0``.
    """
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if not dt_max > 0:
        raise ValueError("dt_max must be > 0")
    if rho.dims != m.dims:
        raise ValueError(f"state dims {rho.dims} do not match model dims {m.dims}")
    ex = _SectorExp(m)
    obs = _Observer(m)
    d = m.drive
    marks = sorted({float(x) for x in (record_times if record_times is not None else ()) if t0 < x < t1} | {t1})
    R = rho.matrix.copy()
    rec = _Recorder(obs, d, t0, R)
    t = t0
    dt = dt_max
    for mark in marks:
        while t < mark - 1e-14 * max(1.0, abs(mark)):
            h = min(dt, mark - t)
            for _ in range(MAX_HALVINGS):
                w_full = float(d.omega(t + 0.5 * h))
                w1 = float(d.omega(t + 0.25 * h))
                w2 = float(d.omega(t + 0.75 * h))
                coarse = ex.evolve(ex.blocks(w_full, h), R)
                half = ex.evolve(ex.blocks(w1, 0.5 * h), R)
                fine = ex.evolve(ex.blocks(w2, 0.5 * h), half)
                err = _step_error(obs, coarse, fine, float(d.omega(t + h)))
                if err <= tol:
                    break
                h *= 0.5
            else:
                raise ConvergenceError(
                    f"step size halving did not reach tolerance {tol:.1e} at t={t:.6g} "
                    f"(last error estimate {err:.3e} at step {h:.3e})",
                    achieved=err,
                )
            rec.jump(w1, R)
            rec.jump(w2, half)
            R = fine
            t = t + h if mark - (t + h) > 1e-14 * max(1.0, abs(mark)) else mark
            rec.record(t, R)
            if err < 0.1 * tol:
                dt = min(dt_max, 2.0 * h)
            else:
                dt = h
    R = 0.5 * (R + R.conj().T)
    return DensityOperator(R, rho.dims), rec.trace()


def _pulse_factor(m: SupersystemModel, theta: float) -> np.ndarray:
    """exp(-i theta A) for A = |e><e| (x) (I - sigma_x^P), using A^2 = 2A."""
    A = m.pulse_generator.toarray()
    return np.eye(m.dim) + (np.exp(-2j * theta) - 1.0) * 0.5 * A


def pulse_step_unitaries(m: SupersystemModel, t0: float, t1: float, n_steps: int):
    """Strang-split step propagators of H(t) + h(t) A over a uniform grid on [t0, t1]."""
    if m.pulse is None:
        raise ValueError("model has no pulse")
    ex = _SectorExp(m)
    edges = np.linspace(t0, t1, n_steps + 1)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        w = float(m.drive.omega(0.5 * (a + b)))
        half = ex.unitary(w, 0.5 * (b - a))
        out.append((w, half @ _pulse_factor(m, m.pulse.area(a, b)) @ half))
    return edges, out


def pulse_unitary(m: SupersystemModel, t0: float, t1: float, n_steps: int) -> np.ndarray:
    _, steps = pulse_step_unitaries(m, t0, t1, n_steps)
    U = np.eye(m.dim, dtype=complex)
    for _, u in steps:
        U = u @ U
    return U


def _run_pulse(m, R, t0, t1, n_steps):
    edges, steps = pulse_step_unitaries(m, t0, t1, n_steps)
    for _, u in steps:
        R = _evolve(u, R)
    return R


def cnot_pulse_propagate(
    m: SupersystemModel,
    rho: DensityOperator,
    t0: float,
    t1: float,
    *,
    tol: float = 1e-10,
    steps_per_tau: int = 4,
    max_doublings: int = 12,
) -> DensityOperator:
    """Propagate through the system-probe pulse, doubling the step count until converged.

    Convergence is judged on the largest change of any density-matrix element
    between successive step counts.
    """
    if m.pulse is None or not m.include_probe:
        raise ValueError("model needs the probe and a pulse")
    lo, hi = m.pulse.window
    if t0 > lo or t1 < hi:
        raise ValueError(f"propagation interval must cover the pulse window [{lo:.6g}, {hi:.6g}]")
    if rho.dims != m.dims:
        raise ValueError(f"state dims {rho.dims} do not match model dims {m.dims}")
    n = max(8, int(np.ceil((t1 - t0) / m.pulse.tau_m * steps_per_tau)))
    prev = _run_pulse(m, rho.matrix, t0, t1, n)
    err = np.inf
    for _ in range(max_doublings):
        n *= 2
        cur = _run_pulse(m, rho.matrix, t0, t1, n)
        err = float(np.max(np.abs(cur - prev)))
        prev = cur
        if err <= tol:
            return DensityOperator(0.5 * (cur + cur.conj().T), rho.dims)
    raise ConvergenceError(f"pulse propagation did not converge (last change {err:.3e} at {n} steps)", achieved=err)
