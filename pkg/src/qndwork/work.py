"""Cycle work routes, work-information bounds and the three-stroke ledger.

Sign convention: positive work is work delivered to the piston.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .bath import DEFAULT_SPAN, BathSpec, response_zero_T, spectral_intervals
from .errors import QuadratureError
from .kernels import KernelTable
from .modulation import DriveSpec

LEDGER_FIELDS = ("dE_meas", "dS_meas", "W_cycle", "W_tot", "W_SL", "W_nsm_max", "W_sel_max", "strokes")
_PERIOD_RTOL = 1e-9


@dataclass(frozen=True)
class Stroke:
    label: str
    work: float
    dE: float
    dS: float


@dataclass(frozen=True)
class WorkLedger:
    dE_meas: float | None = None
    dS_meas: float | None = None
    W_cycle: float | None = None
    W_tot: float | None = None
    W_SL: float | None = None
    W_nsm_max: float | None = None
    W_sel_max: float | None = None
    strokes: tuple[Stroke, ...] | None = None

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in LEDGER_FIELDS}
        if self.strokes is not None:
            out["strokes"] = [asdict(s) for s in self.strokes]
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _one_period(k: KernelTable, d):
    """Grid slice [0, period] of the table; the period must be a grid point."""
    t = k.t_grid
    T = d.period
    i = int(np.searchsorted(t, T - _PERIOD_RTOL * T))
    if i >= t.size or abs(t[i] - T) > _PERIOD_RTOL * T:
        raise ValueError(f"kernel grid does not contain a full period (period {T:.6g}, grid end {t[-1]:.6g})")
    return slice(0, i + 1)


def _cycle_integral(t, f):
    return float(integrate.simpson(f, x=t))


def cycle_work_quadrature(k: KernelTable, d) -> float:
    """W = -int_0^period s(t) omega'(t) dt from the tabulated polarization."""
    if k.s is None:
        raise ValueError("kernel table has no polarization; run polarization_trajectory first")
    sl = _one_period(k, d)
    t = k.t_grid[sl]
    return -_cycle_integral(t, k.s[sl] * d.omega_dot(d.t_start + t))


def cycle_work_approx(k: KernelTable, d) -> float:
    """Ground-state leading order W = -int_0^period J_g(t) omega'(t) dt."""
    sl = _one_period(k, d)
    t = k.t_grid[sl]
    return -_cycle_integral(t, k.J_g[sl] * d.omega_dot(d.t_start + t))


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def cycle_work_closed_form(
    b: BathSpec,
    d: DriveSpec,
    *,
    span: float = DEFAULT_SPAN,
    epsabs: float = 1e-13,
    limit: int = 5000,
) -> float:
    """Leading order in delta/Omega of the T = 0 cycle work.

    W = delta int G_0(w) / (w + omega_a)^2
          [sinc(2 pi (w + omega_a + Omega)/Omega) + sinc(2 pi (w + omega_a - Omega)/Omega)] dw
    """
    if not b.zero_temperature:
        raise ValueError("closed-form cycle work is defined only at zero temperature")
    if not isinstance(d, DriveSpec):
        raise TypeError("closed-form cycle work needs a sinusoidal DriveSpec")
    if d.delta / d.Omega > 0.2:
        warnings.warn(
            f"delta/Omega = {d.delta / d.Omega:.3g} > 0.2; the closed form is a small-depth expansion",
            RuntimeWarning,
            stacklevel=2,
        )
    if d.delta == 0.0 or b.eta == 0.0:
        return 0.0
    (lo, hi), = spectral_intervals(b, span)
    wa, Om = d.omega_a, d.Omega

    def f(w):
        a = w + wa
        return response_zero_T(b, w) / a**2 * (_sinc(2 * np.pi * (a + Om) / Om) + _sinc(2 * np.pi * (a - Om) / Om))

    # sinc zeros fall every Omega/2 in w; break there so each panel is smooth
    pts = np.arange(math.ceil(2 * (lo + wa) / Om), math.floor(2 * (hi + wa) / Om) + 1) * Om / 2 - wa
    pts = sorted({float(p) for p in np.append(pts, b.omega0) if lo < p < hi})
    total, err, info = integrate.quad_vec(
        f, lo, hi, epsabs=epsabs, epsrel=1e-10, limit=limit, points=pts or None, full_output=True
    )
    if not info.success:
        raise QuadratureError(f"closed-form frequency integral did not converge (error estimate {err:.3e})")
    return float(d.delta * total)


def nsm_cycle_work(k: KernelTable, d, p_e: float) -> float:
    """Leading-order work after a non-selective measurement with excited population p_e."""
    _check_prob(p_e)
    sl = _one_period(k, d)
    t = k.t_grid[sl]
    wdot = d.omega_dot(d.t_start + t)
    return -_cycle_integral(t, (k.J_g[sl] * (1.0 - p_e) - k.J_e[sl] * p_e) * wdot)


def selective_cycle_work(k_e: KernelTable, k_g: KernelTable, d_e, d_g, p_e: float) -> float:
    """Leading-order work when the drive after the measurement depends on its outcome.

    ``k_e``/``d_e`` are used after outcome e (weight p_e), ``k_g``/``d_g`` after
    outcome g.  With ``d_e == d_g`` this equals :func:`nsm_cycle_work`.
    """
    _check_prob(p_e)
    if not math.isclose(d_e.period, d_g.period, rel_tol=1e-12):
        raise ValueError(f"drive periods differ ({d_e.period:.12g} vs {d_g.period:.12g})")
    sl_e = _one_period(k_e, d_e)
    sl_g = _one_period(k_g, d_g)
    t_e, t_g = k_e.t_grid[sl_e], k_g.t_grid[sl_g]
    w_g = _cycle_integral(t_g, k_g.J_g[sl_g] * d_g.omega_dot(d_g.t_start + t_g))
    w_e = _cycle_integral(t_e, k_e.J_e[sl_e] * d_e.omega_dot(d_e.t_start + t_e))
    return -(1.0 - p_e) * w_g + p_e * w_e


def _check_prob(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")


def binary_entropy(p: float) -> float:
    """-p ln p - (1-p) ln(1-p), with 0 ln 0 = 0."""
    _check_prob(p)
    return float(-sum(x * math.log(x) for x in (p, 1.0 - p) if x > 0.0))


def bounds(dE_meas: float, dS_meas: float, T: float, p_e: float) -> WorkLedger:
    """Maximal post-measurement work for outcome-blind and outcome-aware cycles."""
    if dS_meas < -1e-12:
        raise ValueError(f"measurement entropy change must be >= 0, got {dS_meas}")
    if T < 0:
        raise ValueError("temperature must be >= 0")
    w_sl = T * binary_entropy(p_e)
    w_nsm = dE_meas - T * dS_meas
    return WorkLedger(dE_meas=dE_meas, dS_meas=dS_meas, W_SL=w_sl, W_nsm_max=w_nsm, W_sel_max=w_nsm + w_sl)


def optimal_cycle_ledger(E_before, E_after_meas, S_before, S_after_meas, E_stab, T) -> WorkLedger:
    """Measurement, sudden stabilization and isothermal return strokes.

    ``E_stab`` is the mean of the stabilizing Hamiltonian (the one making the
    post-measurement state Gibbs at temperature ``T``) in that state.
    """
    dE = E_after_meas - E_before
    dS = S_after_meas - S_before
    w_sudden = E_after_meas - E_stab
    w_iso = -(E_before - E_stab) - T * dS
    strokes = (
        Stroke("measurement", -dE, dE, dS),
        Stroke("sudden", w_sudden, -w_sudden, 0.0),
        Stroke("isotherm", w_iso, E_before - E_stab, -dS),
    )
    total = w_sudden + w_iso
    return WorkLedger(dE_meas=dE, dS_meas=dS, W_cycle=total, W_tot=total - dE, W_nsm_max=dE - T * dS, strokes=strokes)
