"""Lorentzian bath response at zero and finite temperature.

Units are natural (hbar = k_B = 1).  The zero-temperature response is

    G_0(w) = eta**2 * gamma / ((w - omega0)**2 + gamma**2),   gamma = 1 / tc,

for w >= 0 and zero for w < 0.  The finite-temperature response weights
emission by ``1 + n(w)`` and absorption (negative w) by ``n(|w|)``, which
makes it obey the KMS relation ``G_T(-w) = exp(-beta w) G_T(w)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_SPAN = 40.0


@dataclass(frozen=True)
class BathSpec:
    eta: float
    omega0: float
    tc: float
    beta: float = math.inf

    def __post_init__(self):
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be finite and >= 0, got {self.eta}")
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not (self.tc > 0 and math.isfinite(self.tc)):
            raise ValueError(f"tc must be > 0, got {self.tc}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0 or inf, got {self.beta}")

    @property
    def width(self) -> float:
        """Lorentzian half width 1/tc."""
        return 1.0 / self.tc

    @property
    def temperature(self) -> float:
        return 0.0 if math.isinf(self.beta) else 1.0 / self.beta

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    def with_beta(self, beta: float) -> "BathSpec":
        return BathSpec(self.eta, self.omega0, self.tc, beta)


def _lorentzian(spec: BathSpec, omega):
    g = spec.width
    return spec.eta**2 * g / ((omega - spec.omega0) ** 2 + g * g)


def response_zero_T(spec: BathSpec, omega):
    """Zero-temperature response G_0(omega); vanishes for omega < 0."""
    w = np.asarray(omega, dtype=float)
    out = np.where(w >= 0, _lorentzian(spec, w), 0.0)
    return out if out.ndim else float(out)


def bose(beta: float, omega):
    """Bose occupation 1/(exp(beta*omega) - 1) for omega > 0 (0 at beta = inf)."""
    w = np.asarray(omega, dtype=float)
    if math.isinf(beta):
        return np.zeros_like(w)
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(beta * w)


def response_finite_T(spec: BathSpec, omega):
    """Finite-temperature response G_T(omega), KMS-symmetric.

    Reduces to :func:`response_zero_T` for ``beta = inf``.  At ``omega = 0``
    with finite beta the Bose factor diverges; the continuous limit exists only
    when ``G_0(0) = 0`` (i.e. ``eta = 0``), otherwise ``ValueError`` is raised.
    """
    if spec.zero_temperature:
        return response_zero_T(spec, omega)
    w = np.asarray(omega, dtype=float)
    zero = w == 0
    if np.any(zero) and spec.eta > 0:
        raise ValueError("G_T(0) is infinite at finite temperature for this bath")
    a = np.abs(np.where(zero, 1.0, w))
    g0 = _lorentzian(spec, a)
    n = bose(spec.beta, a)
    with np.errstate(invalid="ignore"):
        out = np.where(w > 0, (1.0 + n) * g0, n * g0)
    # an overflowing Bose factor must not turn a vanishing spectrum into nan
    out = np.where(g0 == 0, 0.0, out)
    out = np.where(zero, 0.0, out)
    return out if out.ndim else float(out)


def spectral_intervals(spec: BathSpec, span: float = DEFAULT_SPAN, ir_cutoff: float | None = None):
    """Frequency intervals carrying the integrated spectral weight.

    The positive-frequency window is ``|w - omega0| <= span/tc`` clipped below at
    ``ir_cutoff`` (default ``1/tc``).  At finite temperature its mirror image on
    the negative axis is included as well.  The infrared clip keeps the
    finite-temperature integrals finite: with the hard cutoff at w = 0 the
    thermal factor n(w) ~ T/w would otherwise make them diverge
    logarithmically.
    """
    if ir_cutoff is None:
        ir_cutoff = spec.width
    lo = max(spec.omega0 - span * spec.width, ir_cutoff, 0.0)
    hi = spec.omega0 + span * spec.width
    if hi <= lo:
        raise ValueError("empty spectral window; increase span or lower ir_cutoff")
    if spec.zero_temperature:
        return [(lo, hi)]
    return [(-hi, -lo), (lo, hi)]


def golden_rule_rates(spec: BathSpec, omega):
    """Instantaneous emission and absorption rates (G_T(w), G_T(-w)) at splitting w > 0."""
    w = np.asarray(omega, dtype=float)
    return response_finite_T(spec, w), response_finite_T(spec, -w)
