"""Exact dynamics of the qubit + probe + discretized-bath supersystem."""
from .audit import (
    CycleResult,
    convergence_study,
    measurement_cycle,
    probe_measurement,
    probe_reuse_check,
    sp_decorrelation_run,
    total_work_audit,
)
from .dynamics import EnergyTrace, cnot_pulse_propagate, propagate, pulse_unitary
from .model import Pulse, SupersystemModel, discretize_bath, mode_basis
from .states import (
    DensityOperator,
    MeasurementCost,
    attach_probe,
    free_energy,
    measurement_cost,
    nsm_channel,
    probe_state,
    sb_hamiltonian,
    selective_channel,
    stabilizing_energy,
    thermal_state,
    von_neumann_entropy,
)
