import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from qndwork import markovian as mk
from qndwork.bath import BathSpec
from qndwork.kernels import (
    KernelTable,
    equilibrium_polarization,
    period_grid,
    polarization_trajectory,
    relaxation_integrals,
)
from qndwork.modulation import DriveSpec, FourierDrive
from qndwork.work import (
    LEDGER_FIELDS,
    WorkLedger,
    binary_entropy,
    bounds,
    cycle_work_approx,
    cycle_work_closed_form,
    cycle_work_quadrature,
    nsm_cycle_work,
    optimal_cycle_ledger,
    selective_cycle_work,
)

# midpoint sum with 4e6 frequency nodes, eta = 1, delta = 0.05, Omega = 5/2
CLOSED_FORM_RIEMANN = 0.02332491934936274
# trapezoid rule on 1e5 points per period, reference bath at eta = 0.05, beta = 3.74
FIG1_CYCLE_WORK = 2.4485131092056786e-4


def test_closed_form_matches_riemann_oracle():
    w = cycle_work_closed_form(BathSpec(1.0, 10 / 7, 10.0), DriveSpec(1.0, 0.05, 2.5))
    assert w == pytest.approx(CLOSED_FORM_RIEMANN, rel=1e-9)


def test_closed_form_agrees_with_quadrature():
    b = BathSpec(0.05, 10 / 7, 10.0)
    d = DriveSpec(1.0, 0.05, 2.5)
    k = polarization_trajectory(relaxation_integrals(b, d, period_grid(d)), -0.5)
    assert cycle_work_quadrature(k, d) == pytest.approx(cycle_work_closed_form(b, d), rel=0.10)


def test_reference_cycle_work_is_positive(bath_warm, drive):
    k = relaxation_integrals(bath_warm, drive, period_grid(drive))
    k = polarization_trajectory(k, equilibrium_polarization(3.74, 1.0))
    w = cycle_work_quadrature(k, drive)
    assert w > 0
    assert w == pytest.approx(FIG1_CYCLE_WORK, rel=1e-6)


def test_closed_form_guards(bath_T0):
    with pytest.raises(ValueError):
        cycle_work_closed_form(bath_T0.with_beta(2.0), DriveSpec(1.0, 0.05, 2.5))
    with pytest.raises(TypeError):
        cycle_work_closed_form(bath_T0, FourierDrive.sinusoid(1.0, 0.05, 2.5))
    with pytest.warns(RuntimeWarning):
        cycle_work_closed_form(bath_T0, DriveSpec(1.0, 0.9, 2.5))
    assert cycle_work_closed_form(bath_T0, DriveSpec(1.0, 0.0, 2.5)) == 0.0


def test_markovian_kernels_reproduce_rate_equation_work(bath_warm, drive):
    # kernels that grow as the integral of instantaneous golden-rule rates
    r = mk.golden_rule_trajectory(bath_warm, drive)
    t = period_grid(drive, 1, 4000)
    re, rg = r.rates(drive.t_start + t)
    J_e = integrate.cumulative_simpson(re, x=t, initial=0.0)
    J_g = integrate.cumulative_simpson(rg, x=t, initial=0.0)
    p = mk.periodic_steady_state(r)
    k = polarization_trajectory(KernelTable(t, J_e, J_g, 0.5 * (J_g - J_e)), p - 0.5)
    w = cycle_work_quadrature(k, drive)
    assert w <= 1e-9
    assert w == pytest.approx(mk.steady_cycle_report(r).W, rel=1e-6)


def test_static_levels_give_no_work(bath_warm):
    d = DriveSpec(1.0, 0.0, 2.5)
    k = polarization_trajectory(relaxation_integrals(bath_warm, d, period_grid(d, 1, 200)), -0.4)
    assert cycle_work_quadrature(k, d) == 0.0
    assert cycle_work_approx(k, d) == 0.0


@pytest.fixture(scope="module")
def warm_kernels():
    b = BathSpec(0.05, 10 / 7, 10.0, 3.74)
    d = DriveSpec(1.0, 0.25, 2.5, t_start=1.0)
    return b, d, relaxation_integrals(b, d, period_grid(d, 1, 400))


def test_nsm_work_limits(warm_kernels):
    _, d, k = warm_kernels
    assert nsm_cycle_work(k, d, 0.0) == pytest.approx(cycle_work_approx(k, d), rel=1e-14)
    lin = 0.3 * nsm_cycle_work(k, d, 1.0) + 0.7 * nsm_cycle_work(k, d, 0.0)
    assert nsm_cycle_work(k, d, 0.3) == pytest.approx(lin, rel=1e-12)
    with pytest.raises(ValueError):
        nsm_cycle_work(k, d, 1.2)


def test_selective_with_common_drive_is_nsm(warm_kernels):
    _, d, k = warm_kernels
    assert selective_cycle_work(k, k, d, d, 0.1) == pytest.approx(nsm_cycle_work(k, d, 0.1), rel=1e-14)


def test_outcome_aware_drive_beats_blind_drive(warm_kernels):
    b, d, k = warm_kernels
    blind = nsm_cycle_work(k, d, 0.1)
    best = -math.inf
    for phi in np.linspace(0, 2 * math.pi, 8, endpoint=False):
        de = FourierDrive.sinusoid(1.0, 0.25, 2.5, phi, t_start=1.0)
        ke = relaxation_integrals(b, de, period_grid(de, 1, 400))
        best = max(best, selective_cycle_work(ke, k, de, d, 0.1))
    assert best > blind


def test_selective_period_mismatch(warm_kernels):
    _, d, k = warm_kernels
    with pytest.raises(ValueError, match="periods"):
        selective_cycle_work(k, k, d, DriveSpec(1.0, 0.25, 3.0), 0.1)


def test_short_table_refused(warm_kernels):
    _, d, k = warm_kernels
    short = KernelTable(k.t_grid[:100], k.J_e[:100], k.J_g[:100], k.dJ[:100], np.zeros(100))
    with pytest.raises(ValueError, match="period"):
        cycle_work_quadrature(short, d)
    with pytest.raises(ValueError, match="polarization"):
        cycle_work_quadrature(k, d)


def test_bounds_values():
    led = bounds(0.01, 0.004, 0.5, 0.2)
    assert led.W_SL == pytest.approx(0.5 * binary_entropy(0.2))
    assert led.W_nsm_max == pytest.approx(0.01 - 0.002)
    assert led.W_sel_max - led.W_nsm_max == pytest.approx(led.W_SL, abs=1e-15)
    zero_T = bounds(0.01, 0.004, 0.0, 0.2)
    assert zero_T.W_SL == 0.0 and zero_T.W_nsm_max == 0.01
    with pytest.raises(ValueError):
        bounds(0.01, -1e-6, 0.5, 0.2)
    with pytest.raises(ValueError):
        bounds(0.01, 0.0, -0.1, 0.2)


def test_binary_entropy_values():
    assert binary_entropy(0.0) == 0.0 == binary_entropy(1.0)
    assert binary_entropy(0.5) == pytest.approx(math.log(2))


def test_ledger_json_keys():
    led = optimal_cycle_ledger(-0.4, -0.39, 0.1, 0.11, -0.42, 0.3)
    data = json.loads(led.to_json())
    assert tuple(data) == LEDGER_FIELDS
    assert [s["label"] for s in data["strokes"]] == ["measurement", "sudden", "isotherm"]
    assert WorkLedger().to_dict()["strokes"] is None


energies = st.floats(-5.0, 5.0)


@settings(max_examples=300, deadline=None)
@given(E0=energies, E1=energies, S0=st.floats(0.0, 3.0), dS=st.floats(0.0, 1.0), Es=energies, T=st.floats(0.0, 10.0))
def test_stroke_identity(E0, E1, S0, dS, Es, T):
    led = optimal_cycle_ledger(E0, E1, S0, S0 + dS, Es, T)
    sudden, iso = led.strokes[1].work, led.strokes[2].work
    expected = (E1 - E0) - T * ((S0 + dS) - S0)
    assert sudden + iso == pytest.approx(expected, abs=1e-12)
    assert led.W_tot == pytest.approx(-T * ((S0 + dS) - S0), abs=1e-12)
    assert sum(s.dE for s in led.strokes) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(p=st.floats(0.0, 1.0))
def test_binary_entropy_range(p):
    h = binary_entropy(p)
    assert 0.0 <= h <= math.log(2) + 1e-15
    # 1 - p rounds to 1 for p below machine epsilon, costing up to eps*|ln eps|
    assert h == pytest.approx(binary_entropy(1.0 - p), abs=1e-13)


@settings(max_examples=200, deadline=None)
@given(dE=st.floats(0.0, 1.0), dS=st.floats(0.0, 1.0), T=st.floats(0.0, 10.0), p=st.floats(0.0, 1.0))
def test_selective_gain_is_landauer_work(dE, dS, T, p):
    led = bounds(dE, dS, T, p)
    assert led.W_sel_max - led.W_nsm_max == pytest.approx(T * binary_entropy(p), abs=1e-12)


def test_anti_phased_drives_beat_shared_drive_when_terms_oppose():
    # at fast modulation the g and e contributions of a shared drive have opposite signs
    b = BathSpec(0.05, 10 / 7, 10.0, 3.74)
    d = FourierDrive.sinusoid(1.0, 0.25, 6.0, 0.0, t_start=1.0)
    anti = FourierDrive.sinusoid(1.0, 0.25, 6.0, math.pi, t_start=1.0)
    k = relaxation_integrals(b, d, period_grid(d, 1, 400))
    k_anti = relaxation_integrals(b, anti, period_grid(anti, 1, 400))
    p_e = 0.1
    g_term = -(1 - p_e) * integrate.simpson(k.J_g * d.omega_dot(1.0 + k.t_grid), x=k.t_grid)
    e_term = p_e * integrate.simpson(k.J_e * d.omega_dot(1.0 + k.t_grid), x=k.t_grid)
    assert g_term * e_term < 0
    assert selective_cycle_work(k, k_anti, d, anti, p_e) > nsm_cycle_work(k, d, p_e)


def test_approx_work_changes_sign_over_modulation_rate():
    b = BathSpec(0.05, 10 / 7, 10.0)
    signs = set()
    for Omega in (1.0, 2.0, 4.0, 6.0, 10.0, 20.0):
        d = DriveSpec(1.0, 0.02 * Omega, Omega)
        signs.add(np.sign(cycle_work_approx(relaxation_integrals(b, d, period_grid(d, 1, 400)), d)))
    assert {-1.0, 1.0} <= signs
