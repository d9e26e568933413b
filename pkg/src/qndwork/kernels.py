"""Non-Markovian relaxation integrals and the weak-coupling polarization.

For a drive with phase factor ``eps(t) = exp(i int_0^t omega)`` the relaxation
integrals are spectral overlaps

    J_e(t) = (1/2pi) int dw G_T(w) |int_0^t e^{-i w t'} eps(t') dt'|^2
    J_g(t) = (1/2pi) int dw G_T(w) |int_0^t e^{+i w t'} eps(t') dt'|^2

``J_e`` (decay e -> g) is resonant at ``w = omega_a``; ``J_g`` (excitation
g -> e) picks up only thermal absorption and the off-resonant counter-rotating
overlap.  Times are measured from the measurement, i.e. ``t = 0`` is the
drive's ``t_start``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .bath import DEFAULT_SPAN, BathSpec, response_finite_T, spectral_intervals
from .errors import NumericalError, QuadratureError

KERNEL_COLUMNS = ("t", "J_e", "J_g", "dJ", "s")
DEFAULT_EPSABS = 1e-9
DEFAULT_POINTS_PER_PERIOD = 2000


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KernelTable:
    t_grid: np.ndarray
    J_e: np.ndarray
    J_g: np.ndarray
    dJ: np.ndarray
    s: np.ndarray | None = None

    def __post_init__(self):
        for name in ("t_grid", "J_e", "J_g", "dJ"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.s is not None:
            object.__setattr__(self, "s", _frozen(self.s))
        n = self.t_grid.size
        if any(getattr(self, k).shape != (n,) for k in ("J_e", "J_g", "dJ")):
            raise ValueError("kernel series must share the time grid")
        if self.s is not None and self.s.shape != (n,):
            raise ValueError("polarization must share the time grid")

    @property
    def J(self):
        return self.J_e + self.J_g

    def to_csv(self, path):
        s = self.s if self.s is not None else np.full(self.t_grid.size, np.nan)
        with open(path, "w", newline="") as fh:
            write_kernel_csv(fh, self.t_grid, self.J_e, self.J_g, self.dJ, s)

    @classmethod
    def from_csv(cls, path):
        data = np.genfromtxt(path, delimiter=",", names=True)
        s = data["s"]
        return cls(data["t"], data["J_e"], data["J_g"], data["dJ"], None if np.all(np.isnan(s)) else s)


def write_kernel_csv(fh, t, J_e, J_g, dJ, s):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(KERNEL_COLUMNS)
    for row in zip(t, J_e, J_g, dJ, s):
        w.writerow([format(float(v), ".17g") for v in row])


def period_grid(d, n_periods: int = 1, points_per_period: int = DEFAULT_POINTS_PER_PERIOD, max_dt: float | None = None):
    """Uniform grid on [0, n_periods * period] whose period multiples are grid points.

    ``max_dt`` raises the point count for long periods so that the step stays
    below it.
    """
    per = points_per_period
    if max_dt is not None:
        per = max(per, int(math.ceil(d.period / max_dt)))
    per += per % 2  # even panel count keeps Simpson's rule exact on each period
    return np.linspace(0.0, n_periods * d.period, n_periods * per + 1)


class _TimeQuadrature:
    """Composite Gauss-Legendre rule for int_0^{t_k} e^{i k t'} eps(t') dt' on a grid."""

    def __init__(self, d, t_grid, k_max: float, nodes: int = 8):
        t = np.asarray(t_grid, dtype=float)
        h = np.diff(t)
        # subdivide so every panel spans at most one radian of the fastest phase
        q = max(1, int(math.ceil((h.max() if h.size else 0.0) * k_max)))
        x, w = np.polynomial.legendre.leggauss(nodes)
        sub = (np.arange(q)[:, None] + 0.5 * (x[None, :] + 1.0)) / q  # (q, nodes) in [0, 1]
        self.tau = t[:-1, None] + h[:, None] * sub.ravel()[None, :]
        self.weights = (h[:, None] / (2.0 * q)) * np.tile(w, q)[None, :]
        # eps without the constant prefactor; only |.|^2 and conj(I) dI/dt enter
        self.eps_phase = d.omega_a * self.tau + d._mod_int(self.tau)
        self.n_t = t.size

    def integrals(self, omega: float, sign: int):
        """Values at every grid time of int_0^t exp(i(sign*omega*t' + phi(t'))) dt'."""
        ph = self.eps_phase + sign * omega * self.tau
        inc = np.sum(self.weights * np.exp(1j * ph), axis=1)
        out = np.empty(self.n_t, dtype=complex)
        out[0] = 0.0
        np.cumsum(inc, out=out[1:])
        return out


def _breakpoints(b: BathSpec, d, intervals):
    n = d.significant_sidebands(1e-6)
    res = np.concatenate([d.omega_a + n * d.Omega, -(d.omega_a + n * d.Omega), [b.omega0, -b.omega0]])
    pts = []
    for lo, hi in intervals:
        pts.extend(p for p in res if lo < p < hi)
    return sorted(set(float(p) for p in pts))


def _k_max(d, intervals):
    w = max(abs(lo) for lo, _ in intervals)
    w = max(w, max(abs(hi) for _, hi in intervals))
    return w + d.omega_a + d.max_excursion()


def _integrate_vector(f, intervals, points, epsabs, epsrel, limit):
    total = None
    for lo, hi in intervals:
        pts = [p for p in points if lo < p < hi]
        val, err, info = integrate.quad_vec(
            f, lo, hi, epsabs=epsabs, epsrel=epsrel, norm="max", limit=limit,
            points=pts or None, full_output=True,
        )
        if not info.success:
            worst = None
            if info.intervals is not None and len(info.errors):
                i = int(np.argmax(info.errors))
                worst = (float(info.intervals[i][0]), float(info.intervals[i][1]), float(info.errors[i]))
            raise QuadratureError(
                f"frequency quadrature on [{lo:.4g}, {hi:.4g}] did not converge "
                f"(error estimate {err:.3e}, status {info.status})",
                worst_interval=worst,
            )
        total = val if total is None else total + val
    return total


def relaxation_integrals(
    b: BathSpec,
    d,
    t_grid,
    *,
    span: float = DEFAULT_SPAN,
    ir_cutoff: float | None = None,
    epsabs: float = DEFAULT_EPSABS,
    epsrel: float = 0.0,
    limit: int = 20000,
) -> KernelTable:
    """Tabulate J_e, J_g and dJ = (J_g - J_e)/2 on ``t_grid`` (times since the measurement)."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at 0")
    n = t.size
    if b.eta == 0.0:
        z = np.zeros(n)
        return KernelTable(t, z, z, z)
    intervals = spectral_intervals(b, span, ir_cutoff)
    tq = _TimeQuadrature(d, t, _k_max(d, intervals))

    def f(w):
        g = response_finite_T(b, w) / (2.0 * np.pi)
        out = np.empty(2 * n)
        out[:n] = g * np.abs(tq.integrals(w, -1)) ** 2
        out[n:] = g * np.abs(tq.integrals(w, +1)) ** 2
        return out

    vals = _integrate_vector(f, intervals, _breakpoints(b, d, intervals), epsabs, epsrel, limit)
    J_e, J_g = vals[:n], vals[n:]
    J_e[0] = J_g[0] = 0.0
    return KernelTable(t, J_e, J_g, 0.5 * (J_g - J_e))


def relaxation_rates(
    b: BathSpec,
    d,
    t_points,
    *,
    span: float = DEFAULT_SPAN,
    ir_cutoff: float | None = None,
    epsabs: float = 1e-11,
    n_grid: int = 4000,
):
    """Direct evaluation of R_e = dJ_e/dt and R_g = dJ_g/dt at ``t_points``.

    Uses d/dt |I|^2 = 2 Re[conj(I) e^{-+ i w t} eps(t)], independent of any
    differentiation of a tabulated J.
    """
    tp = np.atleast_1d(np.asarray(t_points, dtype=float))
    if b.eta == 0.0:
        return np.zeros(tp.size), np.zeros(tp.size)
    grid = np.union1d(np.linspace(0.0, tp.max(), n_grid), tp)
    idx = np.searchsorted(grid, tp)
    intervals = spectral_intervals(b, span, ir_cutoff)
    tq = _TimeQuadrature(d, grid, _k_max(d, intervals))
    phi = d.omega_a * tp + d._mod_int(tp)
    m = tp.size

    def f(w):
        g = response_finite_T(b, w) / np.pi
        Ie = tq.integrals(w, -1)[idx]
        Ig = tq.integrals(w, +1)[idx]
        out = np.empty(2 * m)
        out[:m] = g * np.real(np.conj(Ie) * np.exp(1j * (phi - w * tp)))
        out[m:] = g * np.real(np.conj(Ig) * np.exp(1j * (phi + w * tp)))
        return out

    vals = _integrate_vector(f, intervals, _breakpoints(b, d, intervals), epsabs, 0.0, 20000)
    return vals[:m], vals[m:]


def _spline_rate(t, J, diff_tol):
    rate = CubicSpline(t, J).derivative()(t)
    if t.size >= 9:
        coarse = CubicSpline(t[::2], J[::2]).derivative()(t[::2])
        err = np.max(np.abs(coarse - rate[::2]))
        scale = np.max(np.abs(rate))
        if err > diff_tol * scale + 1e-15:
            raise NumericalError(
                f"time grid too coarse to differentiate relaxation integrals "
                f"(coarse/fine rate disagreement {err:.3e} vs scale {scale:.3e})"
            )
    return rate


def polarization_trajectory(k: KernelTable, s0: float, *, expansion: bool = False, diff_tol: float = 1e-2) -> KernelTable:
    """Fill ``s`` with the weak-coupling polarization s = (rho_ee - rho_gg)/2.

    Full form: s(t) = exp(-J(t)) (int_0^t dR(t') exp(J(t')) dt' + s0), with
    the rate difference dR = (R_g - R_e)/2 taken from cubic-spline derivatives
    of the tables.  ``expansion=True`` gives the second-order form
    s0 (1 - J) + dJ instead.
    """
    if not -0.5 <= s0 <= 0.5:
        raise ValueError("s0 must lie in [-1/2, 1/2]")
    t = k.t_grid
    J = k.J
    if expansion:
        s = s0 * (1.0 - J) + k.dJ
    elif not np.any(J) and not np.any(k.dJ):
        s = np.full(t.size, float(s0))
    else:
        R_e = _spline_rate(t, k.J_e, diff_tol)
        R_g = _spline_rate(t, k.J_g, diff_tol)
        q = 0.5 * (R_g - R_e) * np.exp(J)
        acc = integrate.cumulative_simpson(q, x=t, initial=0.0)
        s = np.exp(-J) * (acc + s0)
    return replace(k, s=np.clip(s, -0.5, 0.5))


def equilibrium_polarization(beta: float, omega: float) -> float:
    """Gibbs polarization -(1/2) tanh(beta omega / 2) of a two-level system."""
    if not omega > 0:
        raise ValueError("omega must be > 0")
    if math.isinf(beta):
        return -0.5
    return -0.5 * math.tanh(0.5 * beta * omega)
