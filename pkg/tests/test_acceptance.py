"""Acceptance criteria, one test each, with a printed PASS/FAIL line."""
import math
import time

import numpy as np
import pytest
from scipy import linalg

from qndwork import markovian as mk
from qndwork.bath import BathSpec
from qndwork.cli import kernel_table
from qndwork.config import exact_model, load_config
from qndwork.exactsim import (
    Pulse,
    SupersystemModel,
    free_energy,
    measurement_cost,
    measurement_cycle,
    nsm_channel,
    probe_reuse_check,
    sb_hamiltonian,
    selective_channel,
    stabilizing_energy,
    thermal_state,
)
from qndwork.exactsim.dynamics import pulse_unitary
from qndwork.kernels import period_grid, polarization_trajectory, relaxation_integrals
from qndwork.modulation import DriveSpec
from qndwork.work import (
    bounds,
    cycle_work_approx,
    cycle_work_closed_form,
    cycle_work_quadrature,
    optimal_cycle_ledger,
)

OMEGA0 = 10.0 / 7.0
BATH_EXACT = BathSpec(0.1, OMEGA0, 10.0, 3.74)
DRIVE = DriveSpec(1.0, 0.25, 2.5, t_start=1.0)


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line for a criterion, then assert it."""

    def report(label, ok, detail):
        with capsys.disabled():
            print(f"\n{label}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"{label}: {detail}"

    return report


def test_ac1_measurement_cost_identity(verdict):
    start = time.perf_counter()
    worst_after = worst_identity = 0.0
    min_dE = math.inf
    for n_modes in (4, 5, 6):
        m = SupersystemModel(DRIVE, BATH_EXACT, n_modes, 2)
        rho = thermal_state(m, 3.74)
        after = nsm_channel(rho)
        e_sb_eq = rho.expect(m.H_SB)
        H = sb_hamiltonian(m)
        dE = after.expect(H) - rho.expect(H)
        worst_after = max(worst_after, abs(after.expect(m.H_SB)))
        worst_identity = max(worst_identity, abs(dE + e_sb_eq))
        min_dE = min(min_dE, dE)
    elapsed = time.perf_counter() - start
    ok = worst_after <= 1e-10 and worst_identity <= 1e-10 and min_dE > 0 and elapsed < 10
    verdict("AC1 measurement cost", ok,
            f"|<H_SB>_after| {worst_after:.1e}, |dE + <H_SB>_eq| {worst_identity:.1e}, "
            f"min dE {min_dE:.3e}, {elapsed:.1f} s")


def test_ac2_exact_cycle_sign_structure(verdict):
    start = time.perf_counter()
    cfg = load_config("fig1_main")
    m = exact_model(cfg, with_probe=False)
    assert cfg.drive.t_start == 1.0 and cfg.drive.t_start + cfg.drive.period == pytest.approx(3.51, abs=5e-3)
    r = measurement_cycle(m, cfg.bath.beta, dt_max=cfg.exact.dt_max, tol=cfg.exact.step_tol)
    tr = r.trace
    excursion = float(np.max(tr.E_S) - np.min(tr.E_S))
    ret = abs(tr.E_S[-1] - r.E_S_before)
    elapsed = time.perf_counter() - start
    led = r.ledger
    ok = tr.E_piston[-1] > 0 and ret <= 0.05 * excursion and led.W_tot < 0 and elapsed < 300
    verdict("AC2 exact cycle", ok,
            f"E_piston {tr.E_piston[-1]:.3e}, E_S return {ret / excursion:.2%} of excursion, "
            f"W_tot {led.W_tot:.3e}, {elapsed:.1f} s")


def test_ac3_work_sign_against_cycle_duration(verdict):
    start = time.perf_counter()
    cfg = load_config("fig1_inset")
    short, long_ = (2.0, 2.0 * math.pi / 2.5, 6.0), (101.0, 150.0, 200.0)
    w = {}
    for tcyc in short + long_:
        d = DriveSpec(cfg.drive.omega_a, cfg.drive.delta, 2.0 * math.pi / tcyc, cfg.drive.t_start)
        w[tcyc] = cycle_work_quadrature(kernel_table(cfg, drive=d), d)
    elapsed = time.perf_counter() - start
    ok = any(w[t] > 0 for t in short) and all(w[t] <= 1e-6 for t in long_) and elapsed < 120
    verdict("AC3 inset sign", ok,
            "; ".join(f"t={t:.4g}: {v:.2e}" for t, v in w.items()) + f"; {elapsed:.1f} s")


def test_ac4_route_consistency(verdict):
    start = time.perf_counter()
    b = BathSpec(0.05, OMEGA0, 10.0)
    worst, where = 0.0, None
    for Omega in np.linspace(1.0, 10.0, 10):
        d = DriveSpec(1.0, 0.02 * Omega, Omega)
        k = polarization_trajectory(relaxation_integrals(b, d, period_grid(d)), -0.5)
        routes = (cycle_work_quadrature(k, d), cycle_work_closed_form(b, d), cycle_work_approx(k, d))
        for i in range(3):
            for j in range(i + 1, 3):
                rel = abs(routes[i] - routes[j]) / max(abs(routes[i]), abs(routes[j]))
                if rel > worst:
                    worst, where = rel, Omega
    elapsed = time.perf_counter() - start
    verdict("AC4 route consistency", worst <= 0.15 and elapsed < 120,
            f"worst pairwise relative gap {worst:.1%} at Omega={where:g}, {elapsed:.1f} s")


def test_ac5_bounds_identities(verdict):
    start = time.perf_counter()
    m = SupersystemModel(DRIVE, BATH_EXACT, 5, 2)
    worst = 0.0
    zero_T = None
    for beta in (0.5, 1.0, 3.74, 10.0, math.inf):
        rho = thermal_state(m, beta)
        cost = measurement_cost(m, rho)
        T = 0.0 if math.isinf(beta) else 1.0 / beta
        led = bounds(cost.dE, cost.dS, T, cost.p_e)
        rho_s = nsm_channel(rho).reduced_S()
        lam = np.clip(linalg.eigvalsh(rho_s), 0.0, 1.0)
        s_sys = float(-sum(x * math.log(x) for x in lam if x > 0))
        worst = max(worst, abs((led.W_sel_max - led.W_nsm_max) - T * s_sys))
        if math.isinf(beta):
            zero_T = led
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and zero_T.W_SL == 0.0 and zero_T.W_nsm_max > 0 and elapsed < 60
    verdict("AC5 bounds", ok,
            f"max |W_sel - W_nsm - T S(rho_S)| {worst:.1e}; T=0: W_SL {zero_T.W_SL}, "
            f"W_nsm_max {zero_T.W_nsm_max:.3e}; {elapsed:.1f} s")


def test_ac6_markovian_second_law_campaign(verdict):
    start = time.perf_counter()
    reports = mk.campaign(seed=0, n_trajectories=100)
    worst = mk.summarize(reports)
    elapsed = time.perf_counter() - start
    ok = len(reports) == 100 and worst.W <= 1e-8 and worst.max_entropy_violation <= 1e-10 and elapsed < 60
    verdict("AC6 Markovian campaign", ok,
            f"max W {worst.W:.2e}, max entropy violation {worst.max_entropy_violation:.1e}, {elapsed:.1f} s")


def test_ac7_total_work_negative(verdict):
    start = time.perf_counter()
    worst = -math.inf
    count = 0
    for Omega in (1.0, 2.5, 4.0, 6.0, 10.0):
        for beta in (0.5, 1.0, 3.74, math.inf):
            d = DriveSpec(1.0, 0.25, Omega, t_start=1.0)
            m = SupersystemModel(d, BATH_EXACT.with_beta(beta), 5, 2, max_excitations=3)
            led = measurement_cycle(m, beta).ledger
            worst = max(worst, led.W_tot)
            count += 1
    elapsed = time.perf_counter() - start
    verdict("AC7 total work", count == 20 and worst < 0 and elapsed < 1800,
            f"{count} (Omega, beta) pairs, max W_tot {worst:.3e}, {elapsed:.1f} s")


def test_ac8_measurement_channel(verdict):
    start = time.perf_counter()
    sb = SupersystemModel(DRIVE, BATH_EXACT, 4, 2, max_excitations=3)
    rho = thermal_state(sb, 3.74)
    after = nsm_channel(rho)
    idem = float(np.max(np.abs(nsm_channel(after).matrix - after.matrix)))
    keep_s = float(np.max(np.abs(after.reduced_S() - rho.reduced_S())))
    keep_b = float(np.max(np.abs(after.reduced_B() - rho.reduced_B())))
    dS = after.entropy() - rho.entropy()
    pe, re = selective_channel(rho, "e")
    pg, rg = selective_channel(rho, "g")
    mix = float(np.max(np.abs(pe * re.matrix + pg * rg.matrix - after.matrix)))
    m = SupersystemModel(DRIVE, BATH_EXACT, 4, 2, include_probe=True, pulse=Pulse(1.0, 1e-5), max_excitations=3)
    probe_err = probe_reuse_check(m, rho, dt_max=0.01)["first_cycle_error"]
    elapsed = time.perf_counter() - start
    ok = (idem == 0.0 and keep_s <= 1e-12 and keep_b <= 1e-12 and dS >= -1e-10
          and probe_err <= 1e-6 and mix <= 1e-15 and elapsed < 60)
    verdict("AC8 measurement channel", ok,
            f"idempotence {idem:.0e}, rho_S {keep_s:.0e}, rho_B {keep_b:.0e}, dS {dS:.3e}, "
            f"probe CNOT vs dephasing {probe_err:.1e}, selective mixture {mix:.0e}, {elapsed:.1f} s")


def test_ac9_cnot_pulse(verdict):
    start = time.perf_counter()
    pulse = Pulse(1.0, 1e-3)
    m = SupersystemModel(DRIVE, BathSpec(0.0, OMEGA0, 10.0, 3.74), 1, 1, include_probe=True, pulse=pulse)
    lo, hi = pulse.window
    U = pulse_unitary(m, lo, hi, 256)
    U2 = pulse_unitary(m, lo, hi, 512)
    step_change = float(np.max(np.abs(U2 - U)))
    vac = [(s * 2 + q) * m.n_bath for s in (0, 1) for q in (0, 1)]
    free = np.exp(1j * np.array([0.5, 0.5, -0.5, -0.5]) * (DRIVE.phase(hi) - DRIVE.phase(lo)))
    U_int = free[:, None] * U2[np.ix_(vac, vac)]
    cnot = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    fidelity = abs(np.trace(cnot.T @ U_int) / 4) ** 2
    area = pulse.area(lo, hi)
    elapsed = time.perf_counter() - start
    ok = fidelity >= 1 - 1e-4 and abs(area + math.pi / 2) <= 1e-10 and step_change <= 1e-10 and elapsed < 10
    verdict("AC9 CNOT pulse", ok,
            f"1 - fidelity {1 - fidelity:.1e}, area + pi/2 {area + math.pi / 2:.1e}, {elapsed:.2f} s")


def test_ac10_stroke_ledger(verdict):
    start = time.perf_counter()
    m = SupersystemModel(DRIVE, BATH_EXACT, 4, 2)
    H = sb_hamiltonian(m)
    worst = 0.0
    for beta in (0.5, 1.0, 2.0, 3.74, 10.0):
        T = 1.0 / beta
        rho = thermal_state(m, beta)
        after = nsm_channel(rho)
        E_stab = stabilizing_energy(after, beta, free_energy(H, beta))
        led = optimal_cycle_ledger(rho.expect(H), after.expect(H), rho.entropy(), after.entropy(), E_stab, T)
        sudden, iso = led.strokes[1].work, led.strokes[2].work
        target = (after.expect(H) - rho.expect(H)) - T * (after.entropy() - rho.entropy())
        worst = max(worst, abs(sudden + iso - target))
    elapsed = time.perf_counter() - start
    verdict("AC10 stroke ledger", worst <= 1e-12 and elapsed < 60,
            f"max |W_sudden + W_isotherm - (dE - T dS)| {worst:.1e}, {elapsed:.1f} s")
