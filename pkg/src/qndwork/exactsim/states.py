"""Density operators of the supersystem, Gibbs states and measurement channels."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .model import E, G, SupersystemModel

ENTROPY_FLOOR = 1e-15
ZERO_PROBABILITY = 1e-14


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Immutable density matrix on the S (x) P (x) modes basis with factor sizes ``dims``."""

    matrix: np.ndarray
    dims: tuple[int, int, int]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = int(np.prod(self.dims))
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    def _tensor(self):
        return self.matrix.reshape(self.dims + self.dims)

    def reduced_S(self) -> np.ndarray:
        return np.einsum("apbcpb->ac", self._tensor())

    def reduced_P(self) -> np.ndarray:
        return np.einsum("apbaqb->pq", self._tensor())

    def reduced_B(self) -> np.ndarray:
        return np.einsum("apbapc->bc", self._tensor())

    def reduced_SB(self) -> "DensityOperator":
        """Trace out the probe."""
        s, _, b = self.dims
        m = np.einsum("apbcpd->abcd", self._tensor()).reshape(s * b, s * b)
        return DensityOperator(m, (s, 1, b))

    def expect(self, op) -> float:
        """Tr[rho op] for a Hermitian (dense or sparse) operator."""
        if hasattr(op, "multiply"):
            return float(np.real(op.multiply(self.matrix.T).sum()))
        return float(np.real(np.einsum("ij,ji->", self.matrix, op)))

    @property
    def p_e(self) -> float:
        return float(np.real(self.reduced_S()[E, E]))

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.matrix)

    def entropy(self) -> float:
        return von_neumann_entropy(self.matrix)

    def check(self, tol: float = 1e-12, pos_tol: float = 1e-10) -> None:
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > tol:
            raise ValueError(f"density matrix not Hermitian (deviation {herm:.2e})")
        tr = abs(np.trace(m) - 1.0)
        if tr > tol:
            raise ValueError(f"density matrix trace deviates from 1 by {tr:.2e}")
        lmin = self.eigenvalues()[0]
        if lmin < -pos_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lmin:.2e}")


def von_neumann_entropy(m) -> float:
    lam = linalg.eigvalsh(np.asarray(m))
    lam = lam[lam > ENTROPY_FLOOR]
    return float(-np.sum(lam * np.log(lam)))


def probe_state(d: float = 0.0) -> np.ndarray:
    """(I + d sigma_z)/2 with real d in [-1, 1]; d = 0 is the fully mixed probe."""
    if not -1.0 <= d <= 1.0:
        raise ValueError("probe polarization d must lie in [-1, 1]")
    return 0.5 * np.diag([1.0 + d, 1.0 - d])


def attach_probe(rho_sb: DensityOperator, probe: np.ndarray) -> DensityOperator:
    """rho_SB (x) rho_P reordered into the S (x) P (x) modes basis."""
    s, p, b = rho_sb.dims
    if p != 1:
        raise ValueError("state already carries a probe")
    probe = np.asarray(probe, dtype=complex)
    t = rho_sb.matrix.reshape(s, b, s, b)
    m = np.einsum("abcd,pq->apbcqd", t, probe).reshape(s * 2 * b, s * 2 * b)
    return DensityOperator(m, (s, 2, b))


def _gibbs(H: np.ndarray, beta: float) -> np.ndarray:
    lam, V = linalg.eigh(H)
    if math.isinf(beta):
        w = (np.abs(lam - lam[0]) <= 1e-12 * max(1.0, abs(lam[0]))).astype(float)
    else:
        w = np.exp(-beta * (lam - lam[0]))
    w /= w.sum()
    return (V * w) @ V.conj().T


def free_energy(H: np.ndarray, beta: float) -> float:
    """-T ln Tr e^{-beta H}; the ground energy at beta = inf."""
    lam = linalg.eigvalsh(H)
    if math.isinf(beta):
        return float(lam[0])
    return float(lam[0] - np.log(np.sum(np.exp(-beta * (lam - lam[0])))) / beta)


def sb_hamiltonian(m: SupersystemModel, t: float | None = None) -> np.ndarray:
    """Dense H_S + H_B + H_SB on the system+bath factor (probe excluded), at time t (default t_start)."""
    t = m.drive.t_start if t is None else t
    sub = SupersystemModel(m.drive, m.bath, m.n_modes, m.fock_cutoff, span=m.span,
                           max_excitations=m.max_excitations, dim_cap=m.dim_cap,
                           mode_freqs=m.mode_freqs, couplings=m.couplings)
    return sub.hamiltonian(t).toarray()


def thermal_state(m: SupersystemModel, beta: float, probe: np.ndarray | None = None) -> DensityOperator:
    """Gibbs state of H_S(omega_a) + H_B + H_SB, times the probe state if the model has a probe."""
    if not beta > 0:
        raise ValueError("beta must be > 0 or inf")
    H = sb_hamiltonian(m)
    rho = DensityOperator(_gibbs(H, beta), (2, 1, m.n_bath))
    if m.include_probe:
        rho = attach_probe(rho, probe_state() if probe is None else probe)
    return rho


def _s_projector_mask(dims, s_index):
    s, p, b = dims
    mask = np.zeros(s * p * b, dtype=bool)
    mask[s_index * p * b:(s_index + 1) * p * b] = True
    return mask


def nsm_channel(rho: DensityOperator) -> DensityOperator:
    """Dephase the qubit in its energy basis: keep the e-e and g-g blocks only."""
    e = _s_projector_mask(rho.dims, E)
    m = rho.matrix.copy()
    m[np.ix_(e, ~e)] = 0.0
    m[np.ix_(~e, e)] = 0.0
    return DensityOperator(m, rho.dims)


def selective_channel(rho: DensityOperator, outcome: str):
    """(p_j, Pi_j rho Pi_j / p_j) for outcome 'e' or 'g'."""
    if outcome not in ("e", "g"):
        raise ValueError("outcome must be 'e' or 'g'")
    keep = _s_projector_mask(rho.dims, E if outcome == "e" else G)
    m = np.zeros_like(rho.matrix)
    m[np.ix_(keep, keep)] = rho.matrix[np.ix_(keep, keep)]
    p = float(np.real(np.trace(m)))
    if p < ZERO_PROBABILITY:
        raise ValueError(f"outcome {outcome!r} has probability {p:.3e}; conditional state undefined")
    return p, DensityOperator(m / p, rho.dims)


@dataclass(frozen=True)
class MeasurementCost:
    E_before: float
    E_after: float
    S_before: float
    S_after: float
    E_SB_before: float
    E_SB_after: float
    p_e: float

    @property
    def dE(self) -> float:
        return self.E_after - self.E_before

    @property
    def dS(self) -> float:
        return self.S_after - self.S_before


def measurement_cost(m: SupersystemModel, rho: DensityOperator, t: float | None = None) -> MeasurementCost:
    """Energy and entropy changes of the system+bath under the non-selective measurement."""
    sb = rho.reduced_SB() if rho.dims[1] == 2 else rho
    H = sb_hamiltonian(m, t)
    after = nsm_channel(sb)
    hsb = H - np.diag(np.diag(H))  # H_SB is the only off-diagonal part
    return MeasurementCost(
        E_before=sb.expect(H), E_after=after.expect(H),
        S_before=sb.entropy(), S_after=after.entropy(),
        E_SB_before=sb.expect(hsb), E_SB_after=after.expect(hsb),
        p_e=sb.p_e,
    )


def stabilizing_energy(rho: DensityOperator, beta: float, F: float) -> float:
    """<H'> for the Hamiltonian H' = -T ln rho - T ln Z that makes rho Gibbs at 1/beta.

    The normalization is chosen so that H' has partition function Z = exp(-beta F);
    then <H'> = F + T S(rho).
    """
    if math.isinf(beta):
        return F
    return F + rho.entropy() / beta
