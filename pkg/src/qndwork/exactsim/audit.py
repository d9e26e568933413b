"""Measurement-cycle runs on the exact supersystem and their work audits."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import SecondLawViolation
from ..work import WorkLedger, bounds
from .dynamics import EnergyTrace, cnot_pulse_propagate, propagate
from .model import SupersystemModel
from .states import (
    DensityOperator,
    MeasurementCost,
    attach_probe,
    measurement_cost,
    nsm_channel,
    probe_state,
    thermal_state,
)

AUDIT_TOL = 1e-9


def total_work_audit(trace: EnergyTrace, dE_meas: float, *, dS_meas: float | None = None, tol: float = AUDIT_TOL) -> WorkLedger:
    """W_tot = W_cycle - dE_meas with W_cycle the piston's energy gain; W_tot must not be positive."""
    if trace.E_piston[0] != 0.0:
        raise ValueError("trace must start at the measurement (E_piston = 0)")
    w_cycle = float(trace.E_piston[-1])
    w_tot = w_cycle - dE_meas
    if w_tot > tol:
        raise SecondLawViolation(
            f"total cycle work {w_tot:.3e} > 0: refine the time step or the bath truncation"
        )
    return WorkLedger(dE_meas=dE_meas, dS_meas=dS_meas, W_cycle=w_cycle, W_tot=w_tot)


@dataclass(frozen=True)
class CycleResult:
    trace: EnergyTrace
    ledger: WorkLedger
    cost: MeasurementCost
    E_S_before: float
    final_state: DensityOperator


def measurement_cycle(
    m: SupersystemModel,
    beta: float,
    *,
    dt_max: float = 0.05,
    tol: float = 1e-8,
    n_periods: float = 1.0,
    record_times=None,
) -> CycleResult:
    """Gibbs state, instantaneous non-selective measurement at the drive's t_start, then driven cycles."""
    if m.include_probe:
        raise ValueError("use a probe-free model for the instantaneous-measurement cycle")
    rho = thermal_state(m, beta)
    t_m = m.drive.t_start
    cost = measurement_cost(m, rho, t_m)
    after = nsm_channel(rho)
    omega_a = m.drive.omega_a
    E_S_before = 0.5 * omega_a * (2.0 * rho.p_e - 1.0)
    final, trace = propagate(m, after, t_m, t_m + n_periods * m.drive.period, dt_max, tol=tol, record_times=record_times)
    ledger = total_work_audit(trace, cost.dE, dS_meas=cost.dS)
    b = bounds(cost.dE, max(cost.dS, 0.0), 0.0 if np.isinf(beta) else 1.0 / beta, cost.p_e)
    ledger = replace(ledger, W_SL=b.W_SL, W_nsm_max=b.W_nsm_max, W_sel_max=b.W_sel_max)
    return CycleResult(trace, ledger, cost, E_S_before, final)


def convergence_study(m: SupersystemModel, beta: float, **kw) -> dict:
    """Cycle work at n_modes and 2 n_modes under the same truncation rules."""
    out = {"n_modes": [], "dim": [], "W_cycle": [], "W_tot": [], "dE_meas": []}
    for n in (m.n_modes, 2 * m.n_modes):
        mm = SupersystemModel(m.drive, m.bath, n, m.fock_cutoff, span=m.span,
                              max_excitations=m.max_excitations, dim_cap=m.dim_cap)
        r = measurement_cycle(mm, beta, **kw)
        out["n_modes"].append(n)
        out["dim"].append(mm.dim)
        out["W_cycle"].append(r.ledger.W_cycle)
        out["W_tot"].append(r.ledger.W_tot)
        out["dE_meas"].append(r.ledger.dE_meas)
    w0, w1 = out["W_cycle"]
    out["W_cycle_rel_change"] = abs(w1 - w0) / abs(w0) if w0 != 0 else float(abs(w1 - w0))
    return out


def _pulse_bounds(m: SupersystemModel):
    lo, hi = m.pulse.window
    return lo, hi


def probe_measurement(m: SupersystemModel, rho_sb: DensityOperator, probe=None, **kw) -> DensityOperator:
    """Attach the probe, run the pulse, and return the full S+P+B state."""
    lo, hi = _pulse_bounds(m)
    rho = attach_probe(rho_sb, probe_state() if probe is None else probe)
    return cnot_pulse_propagate(m, rho, lo, hi, **kw)


def _free_sb_model(m: SupersystemModel) -> SupersystemModel:
    return SupersystemModel(m.drive, m.bath, m.n_modes, m.fock_cutoff, span=m.span,
                            max_excitations=m.max_excitations, dim_cap=m.dim_cap,
                            mode_freqs=m.mode_freqs, couplings=m.couplings)


def _ideal_dephasing(m: SupersystemModel, rho_sb: DensityOperator, dt_max: float) -> DensityOperator:
    """Free evolution to the pulse centre, instantaneous dephasing, free evolution to the window end."""
    lo, hi = _pulse_bounds(m)
    sb = _free_sb_model(m)
    r, _ = propagate(sb, rho_sb, lo, m.pulse.t_m, dt_max)
    r, _ = propagate(sb, nsm_channel(r), m.pulse.t_m, hi, dt_max)
    return r


def probe_reuse_check(
    m: SupersystemModel,
    rho_sb: DensityOperator,
    probe=None,
    *,
    dt_max: float = 0.05,
    reuse_after: float | None = None,
    pulse_tol: float = 1e-10,
) -> dict:
    """Compare the probe-mediated measurement with the ideal dephasing channel.

    ``first_cycle_error`` is the largest element of Tr_P[pulse(rho (x) probe)]
    minus the ideal channel.  With ``reuse_after`` the same (unreset) probe is
    used again after that much free evolution, and ``second_cycle_error``
    compares that second measurement with the ideal channel applied to the
    evolved system+bath state.  The ``*_energy_error`` entries compare the
    interaction energy <H_SB> left by the two channels instead; this is the
    part that leftover S-P correlations shift through the bath's collective
    coordinate.
    """
    if rho_sb.dims[1] != 1:
        raise ValueError("rho_sb must be a system+bath state")
    full = probe_measurement(m, rho_sb, probe, tol=pulse_tol)
    ideal = _ideal_dephasing(m, rho_sb, dt_max)
    hsb = _free_sb_model(m).H_SB
    report = {
        "first_cycle_error": float(np.max(np.abs(full.reduced_SB().matrix - ideal.matrix))),
        "first_cycle_energy_error": abs(full.reduced_SB().expect(hsb) - ideal.expect(hsb)),
    }
    if reuse_after is not None:
        lo, hi = _pulse_bounds(m)
        t_next = m.pulse.t_m + reuse_after
        m2 = replace(m, pulse=replace(m.pulse, t_m=t_next))
        lo2, _ = _pulse_bounds(m2)
        evolved, trace = propagate(m, full, hi, lo2, dt_max)
        second = cnot_pulse_propagate(m2, evolved, lo2, m2.pulse.window[1], tol=pulse_tol)
        ideal2 = _ideal_dephasing(m2, evolved.reduced_SB(), dt_max)
        report["second_cycle_error"] = float(np.max(np.abs(second.reduced_SB().matrix - ideal2.matrix)))
        report["second_cycle_energy_error"] = abs(second.reduced_SB().expect(hsb) - ideal2.expect(hsb))
        report["sp_coherence_at_reuse"] = float(trace.sp_coherence[-1])
    return report


def sp_decorrelation_run(
    m: SupersystemModel,
    beta: float,
    n_periods: float,
    *,
    probe=None,
    dt_max: float = 0.05,
    pulse_tol: float = 1e-10,
) -> EnergyTrace:
    """Gibbs state, probe pulse at t_m, then free evolution tracking the S-P coherence."""
    sb = _free_sb_model(m)
    full = probe_measurement(m, thermal_state(sb, beta), probe, tol=pulse_tol)
    _, hi = _pulse_bounds(m)
    _, trace = propagate(m, full, hi, m.pulse.t_m + n_periods * m.drive.period, dt_max)
    return trace
