"""Pauli rate equations of a driven qubit under detailed balance.

Levels are E_e = omega(t)/2 and E_g = -omega(t)/2.  The absorption rate is
tied to the emission rate by R_g = R_e exp(-beta omega), so the instantaneous
Gibbs state is stationary at every time.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .bath import BathSpec, bose, response_finite_T
from .errors import NumericalError, SecondLawViolation
from .modulation import FourierDrive

CLOSURE_TOL = 1e-6
WORK_TOL = 1e-8
ENTROPY_TOL = 1e-10
DETAILED_BALANCE_RTOL = 1e-12


@dataclass(frozen=True)
class RateTrajectory:
    """Time-dependent emission/absorption rates for splitting ``drive.omega(t)``.

    ``emission(t)`` returns R_e(t) >= 0 for array t; ``absorption`` defaults to
    the detailed-balance partner R_e exp(-beta omega).
    """

    drive: object
    beta: float
    emission: object
    absorption: object = None
    t_grid: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be > 0 or inf")
        if self.t_grid is None:
            grid = self.drive.t_start + np.linspace(0.0, self.drive.period, 2001)
            object.__setattr__(self, "t_grid", grid)

    def R_e(self, t):
        return np.asarray(self.emission(t), dtype=float)

    def R_g(self, t):
        return self.rates(t)[1]

    def rates(self, t):
        """(R_e, R_g) at t, evaluating the emission rate once."""
        re = self.R_e(t)
        if self.absorption is not None:
            return re, np.asarray(self.absorption(t), dtype=float)
        if math.isinf(self.beta):
            return re, np.zeros_like(re)
        return re, re * np.exp(-self.beta * np.asarray(self.drive.omega(t)))

    def E_e(self, t):
        return 0.5 * self.drive.omega(t)

    def E_g(self, t):
        return -0.5 * self.drive.omega(t)

    def equilibrium_pe(self, t):
        """rho^eq_ee(t) = exp(-beta E_e)/Z."""
        if math.isinf(self.beta):
            return np.zeros_like(np.asarray(t, dtype=float))
        return 1.0 / (1.0 + np.exp(self.beta * self.drive.omega(t)))

    def check(self, rtol: float = DETAILED_BALANCE_RTOL) -> None:
        """Non-negative rates and detailed balance on ``t_grid``."""
        t = self.t_grid
        re, rg = self.rates(t)
        if np.any(re < 0) or np.any(rg < 0):
            raise ValueError("rates must be non-negative")
        pe = self.equilibrium_pe(t)
        lhs, rhs = re * pe, rg * (1.0 - pe)
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        bad = np.abs(lhs - rhs) > rtol * scale
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(f"detailed balance violated at t={t[i]:.6g} ({lhs[i]:.6e} vs {rhs[i]:.6e})")


def golden_rule_trajectory(b: BathSpec, drive) -> RateTrajectory:
    """Instantaneous golden-rule rates R_e = G_T(omega(t)), R_g = G_T(-omega(t))."""
    return RateTrajectory(
        drive, b.beta,
        emission=lambda t: response_finite_T(b, drive.omega(t)),
        absorption=lambda t: response_finite_T(b, -np.asarray(drive.omega(t))),
    )


@dataclass(frozen=True)
class PopulationTrajectory:
    t: np.ndarray
    rho_ee: np.ndarray
    work: np.ndarray  # cumulative -int sum_j rho_jj dE_j/dt

    @property
    def rho_gg(self):
        return 1.0 - self.rho_ee


def _rhs(r: RateTrajectory):
    d = r.drive

    def f(t, y):
        p = y[0]
        re, rg = r.rates(t)
        dp = rg * (1.0 - p) - re * p
        # sum_j rho_jj dE_j/dt = (p - 1/2) omega'
        return [dp, -(p - 0.5) * d.omega_dot(t)]

    return f


def _solve(r, p0, t_eval, rtol, atol, method):
    t0, t1 = float(t_eval[0]), float(t_eval[-1])
    sol = integrate.solve_ivp(_rhs(r), (t0, t1), [p0, 0.0], method=method, t_eval=t_eval,
                              rtol=rtol, atol=atol, max_step=r.drive.period / 20)
    if not sol.success:
        raise NumericalError(f"rate-equation integration failed: {sol.message}")
    return sol.y


def evolve_populations(r: RateTrajectory, rho0, t_eval=None, *, rtol=1e-11, atol=1e-14, method="DOP853") -> PopulationTrajectory:
    """Integrate the excited population from (rho_ee, rho_gg) = rho0 over ``t_eval`` (default ``r.t_grid``)."""
    pe, pg = (float(x) for x in rho0)
    if abs(pe + pg - 1.0) > 1e-12 or pe < 0 or pg < 0:
        raise ValueError("rho0 must be two non-negative populations summing to 1")
    t = np.asarray(r.t_grid if t_eval is None else t_eval, dtype=float)
    y = _solve(r, pe, t, rtol, atol, method)
    p = y[0]
    if np.any(p < -1e-10) or np.any(p > 1 + 1e-10):
        raise NumericalError("population left [0, 1]; integration is not resolving the rates")
    return PopulationTrajectory(t, np.clip(p, 0.0, 1.0), y[1])


def periodic_steady_state(r: RateTrajectory, *, rtol=1e-11, atol=1e-14, method="DOP853") -> float:
    """Excited population at t_start that the one-period map sends to itself.

    The map is affine, p -> c + Phi p, so two integrations fix it.
    """
    d = r.drive
    span = np.array([d.t_start, d.t_start + d.period])
    c = _solve(r, 0.0, span, rtol, atol, method)[0, -1]
    phi = _solve(r, 1.0, span, rtol, atol, method)[0, -1] - c
    if 1.0 - phi < 1e-14:
        return float(r.equilibrium_pe(d.t_start))
    return float(np.clip(c / (1.0 - phi), 0.0, 1.0))


@dataclass(frozen=True)
class EntropyReport:
    t: np.ndarray
    production: np.ndarray  # dS/dt - beta dQ/dt
    auxiliary: np.ndarray   # the A8 combination, must be <= 0
    identity_error: float   # max |sum_j rho_jj' ln(rho_jj/rho_eq) - auxiliary|

    @property
    def max_violation(self) -> float:
        return float(max(0.0, -np.min(self.production), np.max(self.auxiliary)))

    @property
    def worst_time(self) -> float:
        return float(self.t[int(np.argmin(self.production))])


def entropy_production_check(r: RateTrajectory, traj: PopulationTrajectory, *, tol: float = ENTROPY_TOL) -> EntropyReport:
    """Pointwise dS/dt >= dQ/dt / T and the auxiliary log inequality behind it."""
    if math.isinf(r.beta):
        raise ValueError("entropy production needs a finite temperature")
    t = traj.t
    pe = traj.rho_ee
    pg = 1.0 - pe
    re, rg = r.rates(t)
    dpe = rg * pg - re * pe
    eq_e = r.equilibrium_pe(t)
    eq_g = 1.0 - eq_e
    with np.errstate(divide="ignore", invalid="ignore"):
        lnx = np.log(pg / eq_g)
        lny = np.log(pe / eq_e)
        x = pg / eq_g
        y = pe / eq_e
        lhs = dpe * (lny - lnx)
        aux = rg * eq_g * (x * lny - x * lnx + x - y) + re * eq_e * (y * lnx - y * lny + y - x)
    # populations at the boundary make the logs infinite but the products vanish
    lhs = np.where(np.isfinite(lhs), lhs, 0.0)
    aux = np.where(np.isfinite(aux), aux, 0.0)
    production = -lhs  # dS/dt - beta dQ/dt, since ln Z drops out
    rep = EntropyReport(t, production, aux, float(np.max(np.abs(lhs - aux))))
    if rep.max_violation > tol:
        raise SecondLawViolation(
            f"entropy production {np.min(production):.3e} below zero at t={rep.worst_time:.6g}"
        )
    return rep


@dataclass(frozen=True)
class MarkovianReport:
    W: float
    max_entropy_violation: float
    cycle_closure_error: float

    def to_json(self, **kw) -> str:
        return json.dumps({"W": self.W, "max_entropy_violation": self.max_entropy_violation,
                           "cycle_closure_error": self.cycle_closure_error}, **kw)


def closed_cycle_work(r: RateTrajectory, traj: PopulationTrajectory, *, closure_tol=CLOSURE_TOL, work_tol=WORK_TOL) -> float:
    """W = -oint sum_j rho_jj dE_j/dt over a closed cycle; must not be positive."""
    d = r.drive
    t = traj.t
    if not math.isclose(t[-1] - t[0], d.period, rel_tol=1e-12):
        raise ValueError("trajectory must span exactly one drive period")
    err = abs(traj.rho_ee[-1] - traj.rho_ee[0])
    if err > closure_tol:
        raise NumericalError(f"cycle not closed: population mismatch {err:.3e} > {closure_tol:.1e}")
    w = float(traj.work[-1] - traj.work[0])
    if w > work_tol:
        raise SecondLawViolation(f"closed-cycle work {w:.3e} > 0 from a single Markovian bath")
    return w


def steady_cycle_report(r: RateTrajectory) -> MarkovianReport:
    """Run one period at the periodic steady state and audit it."""
    r.check()
    p0 = periodic_steady_state(r)
    traj = evolve_populations(r, (p0, 1.0 - p0))
    closure = float(abs(traj.rho_ee[-1] - traj.rho_ee[0]))
    w = closed_cycle_work(r, traj)
    viol = entropy_production_check(r, traj).max_violation if math.isfinite(r.beta) else 0.0
    return MarkovianReport(w, viol, closure)


def random_trajectory(rng: np.random.Generator, n_harmonics: int = 3) -> RateTrajectory:
    """Random periodic splitting and positive emission rate obeying detailed balance."""
    omega_a = rng.uniform(0.5, 2.0)
    Omega = rng.uniform(0.2, 5.0)
    beta = rng.uniform(0.2, 5.0)
    raw = rng.normal(size=(2, n_harmonics)) / np.arange(1, n_harmonics + 1)
    depth = rng.uniform(0.05, 0.8) * omega_a / np.sum(np.abs(raw))
    drive = FourierDrive(omega_a, Omega, tuple(depth * raw[0]), tuple(depth * raw[1]))
    gamma0 = 10.0 ** rng.uniform(-2, 1)
    a, b = 0.5 * rng.normal(size=(2, n_harmonics))
    k = np.arange(1, n_harmonics + 1) * Omega

    def emission(t):
        x = np.multiply.outer(np.asarray(t, dtype=float), k)
        gamma = gamma0 * np.exp(np.cos(x) @ a + np.sin(x) @ b)
        return gamma * (1.0 + bose(beta, drive.omega(t)))

    return RateTrajectory(drive, beta, emission)


def campaign(seed: int, n_trajectories: int) -> list[MarkovianReport]:
    rng = np.random.default_rng(seed)
    return [steady_cycle_report(random_trajectory(rng)) for _ in range(n_trajectories)]


def summarize(reports) -> MarkovianReport:
    """Worst case over a campaign."""
    reports = list(reports)
    if not reports:
        raise ValueError("empty campaign")
    return MarkovianReport(
        max(r.W for r in reports),
        max(r.max_entropy_violation for r in reports),
        max(r.cycle_closure_error for r in reports),
    )
