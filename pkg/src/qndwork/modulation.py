"""Piston drive of the qubit splitting and its phase factor.

A drive is a periodic splitting ``omega(t) = omega_a + m(t - t_start)`` with
zero-mean modulation ``m`` of angular rate ``Omega``.  Before ``t_start`` (the
measurement time) the drive is off and the splitting sits at ``omega_a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

SIDEBAND_TOL = 1e-10


class _PeriodicDrive:
    """Shared behaviour; subclasses supply the modulation and its integral."""

    omega_a: float
    Omega: float
    t_start: float

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.Omega

    def _tau(self, t):
        return np.asarray(t, dtype=float) - self.t_start

    def omega(self, t):
        tau = self._tau(t)
        out = self.omega_a + np.where(tau >= 0, self._mod(tau), 0.0)
        return out if out.ndim else float(out)

    def omega_dot(self, t):
        tau = self._tau(t)
        out = np.where(tau >= 0, self._mod_dot(tau), 0.0)
        return out if out.ndim else float(out)

    def phase(self, t):
        """Accumulated phase int_{t_start}^{t} omega(t') dt'."""
        tau = self._tau(t)
        out = self.omega_a * tau + np.where(tau >= 0, self._mod_int(tau), 0.0)
        return out if out.ndim else float(out)

    def phase_factor(self, t):
        return np.exp(1j * self.phase(t))

    def modulation_factor(self, tau):
        """Periodic part exp(i int_0^tau m) of the phase factor, tau >= 0."""
        return np.exp(1j * self._mod_int(np.asarray(tau, dtype=float)))

    def significant_sidebands(self, tol: float = 1e-8) -> np.ndarray:
        """Harmonic indices n whose sideband coefficient exceeds ``tol`` in magnitude."""
        n_max = 4
        while True:
            try:
                c = self.sideband_coefficients(n_max)
                break
            except ValueError:
                n_max *= 2
        n = np.arange(-n_max, n_max + 1)
        return n[np.abs(c) > tol]

    def max_excursion(self) -> float:
        tau = np.linspace(0.0, self.period, 2049)
        return float(np.max(np.abs(self._mod(tau))))


@dataclass(frozen=True)
class DriveSpec(_PeriodicDrive):
    """Sinusoidal Stark-shift drive ``omega_a + delta sin(Omega (t - t_start))``."""

    omega_a: float
    delta: float
    Omega: float
    t_start: float = 0.0

    def __post_init__(self):
        if not self.omega_a > 0:
            raise ValueError(f"omega_a must be > 0, got {self.omega_a}")
        if not self.Omega > 0:
            raise ValueError(f"Omega must be > 0, got {self.Omega}")
        if not abs(self.delta) < self.omega_a:
            raise ValueError("|delta| must be smaller than omega_a (levels would cross)")

    def _mod(self, tau):
        return self.delta * np.sin(self.Omega * tau)

    def _mod_dot(self, tau):
        return self.delta * self.Omega * np.cos(self.Omega * tau)

    def _mod_int(self, tau):
        return (self.delta / self.Omega) * (1.0 - np.cos(self.Omega * tau))

    def sideband_coefficients(self, n_max: int) -> np.ndarray:
        """Coefficients c_n, n = -n_max..n_max, of exp(i int_0^tau m) = sum c_n e^{i n Omega tau}."""
        return np.exp(1j * self.delta / self.Omega) * sideband_weights(self, n_max)[1]


@dataclass(frozen=True)
class FourierDrive(_PeriodicDrive):
    """General periodic drive ``omega_a + sum_k a_k cos(k Omega tau) + b_k sin(k Omega tau)``."""

    omega_a: float
    Omega: float
    cos_coeffs: tuple = field(default=())
    sin_coeffs: tuple = field(default=())
    t_start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))
        if not self.omega_a > 0 or not self.Omega > 0:
            raise ValueError("omega_a and Omega must be > 0")
        n = max(len(self.cos_coeffs), len(self.sin_coeffs))
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.cos_coeffs)] = self.cos_coeffs
        b[: len(self.sin_coeffs)] = self.sin_coeffs
        object.__setattr__(self, "_harm", (np.arange(1, n + 1), a, b))
        if not self.max_excursion() < self.omega_a:
            raise ValueError("modulation depth must stay below omega_a (levels would cross)")

    @classmethod
    def sinusoid(cls, omega_a, delta, Omega, phi=0.0, t_start=0.0):
        """``omega_a + delta sin(Omega tau + phi)``."""
        return cls(omega_a, Omega, (delta * math.sin(phi),), (delta * math.cos(phi),), t_start)

    @classmethod
    def from_samples(cls, samples, Omega, t_start=0.0, n_harmonics=None):
        """Build from ``omega`` sampled uniformly over one period (endpoint excluded)."""
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        spec = np.fft.rfft(samples) / n
        if n_harmonics is None:
            n_harmonics = (n - 1) // 2
        ks = np.arange(1, n_harmonics + 1)
        a = 2.0 * spec[ks].real
        b = -2.0 * spec[ks].imag
        return cls(float(spec[0].real), Omega, tuple(a), tuple(b), t_start)

    def _harmonics(self):
        return self._harm

    def _mod(self, tau):
        k, a, b = self._harmonics()
        x = np.multiply.outer(np.asarray(tau), k * self.Omega)
        return np.cos(x) @ a + np.sin(x) @ b

    def _mod_dot(self, tau):
        k, a, b = self._harmonics()
        w = k * self.Omega
        x = np.multiply.outer(np.asarray(tau), w)
        return np.cos(x) @ (b * w) - np.sin(x) @ (a * w)

    def _mod_int(self, tau):
        k, a, b = self._harmonics()
        w = k * self.Omega
        x = np.multiply.outer(np.asarray(tau), w)
        return np.sin(x) @ (a / w) + (1.0 - np.cos(x)) @ (b / w)

    def sideband_coefficients(self, n_max: int, n_fft: int = 4096) -> np.ndarray:
        if n_fft < 4 * n_max + 8:
            n_fft = 4 * n_max + 8
        tau = np.arange(n_fft) * self.period / n_fft
        c = np.fft.fft(self.modulation_factor(tau)) / n_fft
        n = np.arange(-n_max, n_max + 1)
        coeffs = c[n % n_fft]
        tail = 1.0 - np.sum(np.abs(coeffs) ** 2)
        if tail > 1e-14:
            raise ValueError(f"n_max={n_max} leaves sideband weight {tail:.3e} unresolved")
        return coeffs


def omega_of_t(d, t):
    return d.omega(t)


def phase_factor(d, t):
    """exp(i int_{t_start}^{t} omega(t') dt'); has unit modulus."""
    return d.phase_factor(t)


def required_sidebands(z: float, tol: float = SIDEBAND_TOL) -> int:
    """Smallest n_max with sum_{|n|>n_max} |J_n(z)| below ``tol``."""
    z = abs(z)
    n = 0
    while True:
        tail = 2.0 * np.sum(np.abs(special.jv(np.arange(n + 1, n + 60), z)))
        if tail < tol:
            return n
        n += 1


def sideband_weights(d: DriveSpec, n_max: int, tol: float = SIDEBAND_TOL):
    """Bessel weights i^n J_n(-delta/Omega) for n in [-n_max, n_max].

    Their sum with ``exp(i n Omega tau)`` reconstructs
    ``exp(-i (delta/Omega) cos(Omega tau))``.  Raises ``ValueError`` when the
    discarded tail ``sum_{|n|>n_max} |J_n|`` exceeds ``tol``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    z = -d.delta / d.Omega
    tail = 2.0 * np.sum(np.abs(special.jv(np.arange(n_max + 1, n_max + 60), z)))
    if tail > tol:
        raise ValueError(
            f"n_max={n_max} too small for delta/Omega={d.delta / d.Omega:.4g} "
            f"(tail {tail:.2e} > {tol:.0e}); need n_max >= {required_sidebands(z, tol)}"
        )
    n = np.arange(-n_max, n_max + 1)
    return n, (1j) ** (n % 4) * special.jv(n, z)
