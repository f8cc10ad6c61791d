import json
import math

import numpy as np
import pytest

from decotime import load_model, validate_model
from decotime.errors import RequiresNormalModesError, StateClassMismatchError
from decotime.modesums import cavity_decay_sum, lamb_dicke_cavity_sum, se_diagonal_sum
from decotime.states import CavityState, QubitRegisterState, build_state
from decotime.tau2 import (assemble_interaction_terms, classify_decoherence,
                           fidelity_short_time, scaling_sweep,
                           tau2_closed_form, tau2_general)
from decotime.vibrations import normal_modes_for

from conftest import (DIPOLE, GAMMA, MODE_VOLUME_1E8, OMEGA_C, V0,
                      benchmark_config, random_sparse_state)

FULL_EXTRA = """
[cavity_decay]
u_profile = ohmic
u_amplitude = 1.0e4
w_profile = ohmic
w_amplitude = 2.0e4
cutoff_xi_c = 1.0e15
mode_density = 1.0e-9

[gating]
classical_amp = [1e5+0j, 1e5+0j, 1e5+0j, 1e5+0j]
classical_wavevector = [0.0, 3.3e6, 0.0]
magnetic_grad0 = [[0,0,1e10],[0,0,1e10],[0,0,1e10],[0,0,1e10]]
magnetic_grad1 = [[0,0,1e10],[0,0,1e10],[0,0,1e10],[0,0,1e10]]
"""


@pytest.fixture(scope="module")
def full_vm():
    """Every bath family active; gating fields state-independent.

    The magnetic gradients are equal for both qubit states, so the
    LD-magnetic family is present as a pure recoil force with zero
    dephasing contribution; the Rabi/Zeeman snapshot itself is off.
    """
    return validate_model(load_model(benchmark_config(extra=FULL_EXTRA)))


@pytest.fixture(scope="module")
def full_terms(full_vm):
    return assemble_interaction_terms(full_vm, normal_modes_for(full_vm))


# -- term assembly -------------------------------------------------------------

def test_only_se_terms_when_everything_else_off():
    text = benchmark_config().replace("topology = independent", "topology = frozen")
    vm = validate_model(load_model(text))
    terms = assemble_interaction_terms(vm, None)
    assert terms.labels() == ["SE-dipole"]


def test_full_benchmark_has_seven_bath_families_no_gating(full_terms):
    assert full_terms.bath_labels() == [
        "SE-dipole", "cavity-decay-u", "cavity-decay-w",
        "LD-SE", "LD-cavity", "LD-classical", "LD-magnetic"]
    assert full_terms.gating_labels() == []


def test_rabi_snapshot_creates_gating_term():
    text = benchmark_config(extra="\n[gating]\nomega_rabi = [1e6+0j, 0j, 0j, 0j]\n")
    vm = validate_model(load_model(text))
    terms = assemble_interaction_terms(vm, normal_modes_for(vm))
    assert "gating-rabi" in terms.labels()
    assert terms.gating_rabi[0] == 1e6 + 0j


def test_ld_terms_require_normal_modes(benchmark_vm):
    with pytest.raises(RequiresNormalModesError):
        assemble_interaction_terms(benchmark_vm, None)


# -- the variance engine ---------------------------------------------------------

def test_hadamard_vacuum_full_terms(full_vm, full_terms):
    """SE immunity plus the exact K-sum + L total for the fiducial state."""
    state = build_state("hadamard", 4)
    report = tau2_general(state, CavityState.vacuum(), full_terms, T=0.0)
    assert report.breakdown["SE-dipole"] == 0.0     # identically, not approximately
    nm = normal_modes_for(full_vm)
    k_total = sum(complex(lamb_dicke_cavity_sum(full_vm, nm, i, j)).real
                  for i in range(4) for j in range(4))
    el = cavity_decay_sum(full_vm).value
    assert report.inv_half_tau2_sq == pytest.approx(k_total + el, rel=1e-10)
    # LD-magnetic present but state-independent (equal gradients)
    assert report.breakdown["LD-magnetic"] == 0.0
    assert report.breakdown["LD-classical"] == 0.0  # <Delta X> = 0 for Hadamard


def test_allzero_se_only_gives_n_times_diagonal(benchmark_vm):
    text = benchmark_config().replace("topology = independent", "topology = frozen")
    vm = validate_model(load_model(text))
    terms = assemble_interaction_terms(vm, None)
    report = tau2_general(build_state("allzero", 4), CavityState.vacuum(), terms)
    expected = 4 * se_diagonal_sum(vm, 0.0).value
    assert report.inv_half_tau2_sq == pytest.approx(expected, rel=1e-10)
    assert report.cross_site_fraction < 1e-15


def test_zero_couplings_mean_infinite_tau2():
    text = benchmark_config(gamma=0.0).replace(
        f"dipole_d10 = [{DIPOLE!r}, 0.0, 0.0]", "dipole_d10 = [0.0, 0.0, 0.0]")
    vm = validate_model(load_model(text))
    terms = assemble_interaction_terms(vm, normal_modes_for(vm))
    report = tau2_general(build_state("ghz", 4), CavityState.vacuum(), terms)
    assert math.isinf(report.tau2)
    assert report.inv_half_tau2_sq == 0.0
    assert fidelity_short_time(report, 1.0) == 1.0


def test_engine_invariant_under_global_phase(full_terms, rng):
    base = random_sparse_state(rng, 4)
    phased = QubitRegisterState.sparse(
        {k: v * np.exp(0.7j) for k, v in base.amplitudes.items()}, 4)
    r1 = tau2_general(base, CavityState.vacuum(), full_terms)
    r2 = tau2_general(phased, CavityState.vacuum(), full_terms)
    assert r1.inv_half_tau2_sq == pytest.approx(r2.inv_half_tau2_sq, rel=1e-12)


def test_engine_invariant_under_relabeling(full_vm, rng):
    """Qubit permutation plus matching position permutation is a no-op."""
    # homogeneous chain: reversing the site order is such a permutation
    state = random_sparse_state(rng, 4)
    flipped = QubitRegisterState.sparse(
        {int(f"{k:04b}"[::-1], 2): v for k, v in state.amplitudes.items()}, 4)
    terms = assemble_interaction_terms(full_vm, normal_modes_for(full_vm))
    r1 = tau2_general(state, CavityState.vacuum(), terms)
    r2 = tau2_general(flipped, CavityState.vacuum(), terms)
    assert r1.inv_half_tau2_sq == pytest.approx(r2.inv_half_tau2_sq, rel=1e-10)


def test_variance_nonnegative_on_random_states(full_terms, rng):
    for _ in range(25):
        state = random_sparse_state(rng, 4)
        report = tau2_general(state, CavityState.vacuum(), full_terms)
        assert report.inv_half_tau2_sq >= 0.0


def test_variance_nonnegative_with_coherent_cavity(full_terms, rng):
    for alpha in (0.5, 1.0 + 0.7j):
        for _ in range(5):
            state = random_sparse_state(rng, 4)
            report = tau2_general(state, CavityState.coherent(alpha), full_terms)
            assert report.inv_half_tau2_sq >= 0.0


def test_monotone_in_temperature_se(benchmark_vm, rng):
    text = benchmark_config().replace("topology = independent", "topology = frozen")
    vm = validate_model(load_model(text))
    terms = assemble_interaction_terms(vm, None)
    state = random_sparse_state(rng, 4)
    values = [tau2_general(state, CavityState.vacuum(), terms, T=T).inv_half_tau2_sq
              for T in (0.0, 1e3, 1e4, 1e5)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))


def test_breakdown_sums_to_total(full_terms, rng):
    state = random_sparse_state(rng, 4)
    report = tau2_general(state, CavityState.coherent(0.3), full_terms, T=100.0)
    total = sum(report.breakdown.values())
    assert total == pytest.approx(report.inv_half_tau2_sq, rel=1e-10)


def test_ghz_cross_site_se_fraction(benchmark_vm):
    terms = assemble_interaction_terms(benchmark_vm, normal_modes_for(benchmark_vm))
    for n_state in (build_state("ghz", 4),):
        report = tau2_general(n_state, CavityState.vacuum(), terms)
        assert report.cross_site_by_label["SE-dipole"] < 1e-6
    # Bell pair: cross-site covariance is maximal, suppression must come
    # from the (omega_c tau)^-4 falloff of the bath sum alone
    text = benchmark_config(n=2)
    vm2 = validate_model(load_model(text))
    terms2 = assemble_interaction_terms(vm2, normal_modes_for(vm2))
    report2 = tau2_general(build_state("ghz", 2), CavityState.vacuum(), terms2)
    assert 0.0 < report2.cross_site_by_label["SE-dipole"] < 1e-6


# -- engine vs published closed forms ---------------------------------------------

def test_engine_matches_se_stationary_formula(rng):
    text = benchmark_config().replace("topology = independent", "topology = frozen")
    vm = validate_model(load_model(text))
    terms = assemble_interaction_terms(vm, None)
    for T in (0.0, 5.0e3):
        for _ in range(10):
            state = random_sparse_state(rng, 4)
            general = tau2_general(state, CavityState.vacuum(), terms, T=T)
            closed = tau2_closed_form("se_stationary", state, vm, T=T)
            assert general.inv_half_tau2_sq == pytest.approx(
                closed.inv_half_tau2_sq, rel=1e-10)


def test_engine_matches_correlated_vacuum_formula(full_vm, full_terms, rng):
    nm = normal_modes_for(full_vm)
    for _ in range(10):
        state = random_sparse_state(rng, 4)
        general = tau2_general(state, CavityState.vacuum(), full_terms)
        closed = tau2_closed_form("correlated_vacuum", state, full_vm, nm=nm)
        # the closed form carries no gating-LD families; compare the shared part
        shared = sum(v for k, v in general.breakdown.items()
                     if k in ("SE-dipole", "LD-SE", "LD-cavity", "cavity-decay-w"))
        closed_shared = sum(v for k, v in closed.breakdown.items()
                            if k in ("SE-dipole", "LD-SE", "LD-cavity", "cavity-decay-w"))
        assert shared == pytest.approx(closed_shared, rel=1e-10)


def test_engine_matches_hadamard_and_ghz_forms(benchmark_vm):
    nm = normal_modes_for(benchmark_vm)
    terms = assemble_interaction_terms(benchmark_vm, nm)
    had = build_state("hadamard", 4)
    g1 = tau2_general(had, CavityState.vacuum(), terms)
    c1 = tau2_closed_form("hadamard", had, benchmark_vm, nm=nm)
    assert g1.inv_half_tau2_sq == pytest.approx(c1.inv_half_tau2_sq, rel=1e-10)
    ghz = build_state("ghz", 4)
    g2 = tau2_general(ghz, CavityState.vacuum(), terms)
    c2 = tau2_closed_form("ghz", ghz, benchmark_vm, nm=nm)
    assert g2.inv_half_tau2_sq == pytest.approx(c2.inv_half_tau2_sq, rel=1e-10)


def test_uncorrelated_formula_on_random_product_states(full_vm, rng):
    nm = normal_modes_for(full_vm)
    terms = assemble_interaction_terms(full_vm, nm)
    for _ in range(5):
        amps = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        state = QubitRegisterState.product(amps)
        general = tau2_general(state, CavityState.vacuum(), terms)
        closed = tau2_closed_form("uncorrelated_vacuum", state, full_vm, nm=nm)
        shared = sum(v for k, v in general.breakdown.items()
                     if k in ("SE-dipole", "LD-SE", "LD-cavity", "cavity-decay-w"))
        assert shared == pytest.approx(closed.inv_half_tau2_sq, rel=1e-10)


def test_closed_form_class_mismatches():
    vm = validate_model(load_model(benchmark_config()))
    ghz = build_state("ghz", 4)
    had = build_state("hadamard", 4)
    with pytest.raises(StateClassMismatchError):
        tau2_closed_form("hadamard", ghz, vm)
    with pytest.raises(StateClassMismatchError):
        tau2_closed_form("ghz", had, vm)
    vm2 = validate_model(load_model(benchmark_config(n=2)))
    with pytest.raises(StateClassMismatchError):
        tau2_closed_form("ghz", build_state("ghz", 2), vm2)
    # note GHZ with N >= 3 does satisfy the sigma_X factorisation, so the
    # mismatch must be probed with a Bell pair
    bell = build_state({0b01: 1 / np.sqrt(2), 0b10: 1 / np.sqrt(2)}, 2)
    with pytest.raises(StateClassMismatchError):
        tau2_closed_form("uncorrelated_vacuum", bell, vm2)
    with pytest.raises(StateClassMismatchError):
        tau2_closed_form("hadamard", had, vm, cavity=CavityState.fock(1))


def test_paper_approximation_recorded(no_se_vm):
    state = build_state("hadamard", 4)
    report = tau2_closed_form("no_se", state, no_se_vm)
    # exact equals the N eta^2 g_b^2 approximation for independent traps
    assert report.approx_inv_half_tau2_sq == pytest.approx(
        report.inv_half_tau2_sq, rel=1e-9)


# -- classifier, fidelity, report ----------------------------------------------

def test_classify_decoherence_thresholds():
    base = benchmark_config(n=2, extra="")
    vm = validate_model(load_model(base.replace(
        "cutoff_omega_c = 1e+17",
        "cutoff_omega_c = 1e+17\nbandwidth_delta_k = 1.0e9\nmean_kbar = 1.0e7")))
    assert classify_decoherence(vm, (0, 1)) == "independent"       # dk d = 1e3
    vm2 = validate_model(load_model(base.replace(
        "cutoff_omega_c = 1e+17",
        "cutoff_omega_c = 1e+17\nbandwidth_delta_k = 1.0e3\nmean_kbar = 1.0e4")))
    assert classify_decoherence(vm2, (0, 1)) == "collective"       # 1e-3, 1e-2
    vm3 = validate_model(load_model(base.replace(
        "cutoff_omega_c = 1e+17",
        "cutoff_omega_c = 1e+17\nbandwidth_delta_k = 1.0e6\nmean_kbar = 1.0e6")))
    assert classify_decoherence(vm3, (0, 1)) == "intermediate"     # dk d = 1


def test_fidelity_short_time_values(no_se_vm):
    state = build_state("hadamard", 4)
    report = tau2_closed_form("hadamard", state, no_se_vm)
    assert fidelity_short_time(report, 0.0) == 1.0
    with pytest.warns(UserWarning, match="untrustworthy"):
        assert fidelity_short_time(report, report.tau2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fidelity_short_time(report, -1.0)


def test_report_json_roundtrip(full_terms, rng):
    report = tau2_general(random_sparse_state(rng, 4), CavityState.vacuum(), full_terms)
    data = json.loads(report.to_json())
    assert data["tau1_s"] == 0.0
    assert data["tau2_s"] == pytest.approx(report.tau2)
    assert set(data["breakdown"]) == set(report.breakdown)


# -- scaling sweeps ----------------------------------------------------------------

def test_sweep_requires_three_increasing_sizes(no_se_vm):
    with pytest.raises(ValueError):
        scaling_sweep(no_se_vm, "hadamard", [100])
    with pytest.raises(ValueError):
        scaling_sweep(no_se_vm, "hadamard", [100, 100, 200])


def test_sweep_csv_layout(no_se_vm):
    result = scaling_sweep(no_se_vm, "hadamard", [10, 100, 1000])
    lines = result.to_csv().splitlines()
    assert lines[0].startswith("N,tau2_s,inv_half_tau2_sq")
    assert len(lines) == 4
    assert lines[1].split(",")[0] == "10"


def test_sweep_null_coupling_scaling(no_se_vm):
    result = scaling_sweep(no_se_vm, "hadamard", [100, 1000, 10000],
                           coupling_scale=lambda n: n ** -0.5)
    assert abs(result.slope) < 1e-9
