import math

import numpy as np
import pytest

from decotime.errors import NumericsError
from decotime.oracle import (FIT_WINDOW, FidelityCurve, OracleSEMode,
                             OracleSpec, OracleVibMode, build_small_system,
                             cross_validate, default_time_grid, engine_tau2,
                             evolve_fidelity, fit_tau2, regression_specs)
from decotime.states import CavityState

S = 1.0e6


def spec_1q_se(g=S, trunc=3, **kw):
    return OracleSpec(name="t", n_qubits=1, omega0=S, state="allzero",
                      se_modes=(OracleSEMode(omega=S, g=(g,), truncation=trunc),), **kw)


# -- Hamiltonian assembly --------------------------------------------------------

def test_hand_checkable_4x4_hamiltonian():
    system = build_small_system(spec_1q_se(trunc=2))
    h = system.h_total
    assert h.shape == (4, 4)
    # basis order |q> x |n>: (|0,0>, |0,1>, |1,0>, |1,1>)
    # sigma_X (a + hc) couples |0,1> <-> |1,0> and |0,0> <-> |1,1>
    assert h[1, 2] == pytest.approx(S)      # g sigma_X a: |1,0><0,1| conj side
    assert h[0, 3] == pytest.approx(S)      # counter-rotating part kept
    assert h[0, 0] == pytest.approx(-0.5 * S)
    assert h[3, 3] == pytest.approx(0.5 * S + S)


def test_hamiltonian_hermiticity_residual():
    spec = regression_specs("full")[11]     # the all-families spec
    system = build_small_system(spec)
    h = system.h_total
    assert np.linalg.norm(h - h.conj().T) <= 1e-14 * np.linalg.norm(h)


def test_thermal_block_boltzmann_ratios():
    spec = OracleSpec(name="t", n_qubits=1, omega0=S, state="allzero",
                      vib_modes=(OracleVibMode(nu=S, truncation=4, occupation=1.0,
                                               theta=(0.3 * S,)),))
    system = build_small_system(spec)
    # trace out the qubit: bath populations on the diagonal
    w = system.w0.reshape(2, 4, 2, 4)
    bath = np.einsum("ibib->b", w).real
    # occupation 1.0 means q = 1/2: weights prop to (1, 1/2, 1/4, 1/8)
    expected = np.array([1.0, 0.5, 0.25, 0.125])
    expected /= expected.sum()
    assert np.allclose(bath, expected, atol=1e-12)


def test_dimension_cap_enforced():
    spec = OracleSpec(name="big", n_qubits=4, omega0=S, state="ghz",
                      se_modes=(OracleSEMode(omega=S, g=(S,) * 4, truncation=36),
                                OracleSEMode(omega=S, g=(S,) * 4, truncation=36)))
    with pytest.raises(ValueError, match="cap"):
        spec.validate()
    with pytest.raises(ValueError, match="truncation"):
        OracleSpec(name="t", n_qubits=1, omega0=S, state="allzero",
                   se_modes=(OracleSEMode(omega=S, g=(S,), truncation=1),)).validate()


# -- evolution ---------------------------------------------------------------------

def test_zero_coupling_keeps_fidelity_one():
    spec = spec_1q_se(g=0.0)
    system = build_small_system(spec)
    curve = evolve_fidelity(system, np.linspace(0, 1e-6, 9), allow_long_times=True)
    assert np.allclose(curve.fidelity, 1.0, atol=1e-12)


def test_resonant_coupling_tau2_within_one_percent():
    system = build_small_system(spec_1q_se())
    grid = default_time_grid(1.0 / (math.sqrt(2) * S))
    curve = evolve_fidelity(system, grid)
    fit = fit_tau2(curve)
    assert fit.tau2 == pytest.approx(1.0 / (math.sqrt(2) * S), rel=0.01)
    assert fit.linear_fraction < 1e-3      # tau_1 = 0


def test_unitarity_trace_purity_and_positivity():
    system = build_small_system(spec_1q_se())
    grid = default_time_grid(1.0 / (math.sqrt(2) * S))
    curve = evolve_fidelity(system, grid, check_every_point=True)
    assert curve.fidelity[0] == pytest.approx(1.0, abs=1e-12)
    assert curve.trace_error < 1e-10
    assert curve.purity_drift < 1e-10
    assert curve.min_eigenvalue > -1e-12


def test_short_time_guard():
    system = build_small_system(spec_1q_se())
    with pytest.raises(ValueError, match="short-time"):
        evolve_fidelity(system, np.linspace(1e-9, 1e-3, 5))


# -- the quadratic fit ---------------------------------------------------------------

def synthetic_curve(tau, cubic=0.0):
    t = default_time_grid(tau)
    loss = (t / tau) ** 2 / 2.0
    loss = loss * (1.0 + cubic * t / (tau * math.sqrt(2e-3)))
    return FidelityCurve(times=t, fidelity=1.0 - loss, trace_error=0.0,
                         purity_drift=0.0, min_eigenvalue=0.0)


def test_fit_exact_quadratic():
    fit = fit_tau2(synthetic_curve(1e-7))
    assert fit.tau2 == pytest.approx(1e-7, rel=1e-6)
    assert not fit.curvature_flag


def test_fit_with_cubic_contamination_flags_curvature():
    fit = fit_tau2(synthetic_curve(1e-7, cubic=0.01))
    assert fit.tau2 == pytest.approx(1e-7, rel=0.01)
    assert fit.curvature_flag


def test_fit_empty_window_suggests_regrid():
    t = np.linspace(1e-12, 2e-12, 12)
    curve = FidelityCurve(times=t, fidelity=np.full(12, 1.0 - 1e-12),
                          trace_error=0.0, purity_drift=0.0, min_eigenvalue=0.0)
    with pytest.raises(ValueError, match="regrid"):
        fit_tau2(curve)


def test_curve_csv():
    curve = synthetic_curve(1e-7)
    lines = curve.to_csv().splitlines()
    assert lines[0] == "t_s,fidelity"
    assert len(lines) == curve.times.size + 1


# -- cross-validation -----------------------------------------------------------------

def test_quick_suite_passes():
    for spec in regression_specs("quick"):
        res = cross_validate(spec)
        assert res.passed, (res.name, res.deviation)
        assert res.trace_error < 1e-10
        assert res.purity_drift < 1e-10


def test_coherent_gating_does_not_shift_tau2():
    plain = engine_tau2(spec_1q_se())
    gated_spec = spec_1q_se(gating_rabi=(0.5 * S,), gating_zeeman=(0.3 * S,))
    gated = engine_tau2(gated_spec)
    assert gated.tau2 == plain.tau2
    res = cross_validate(gated_spec)
    assert res.passed


def test_corrupted_coupling_detected():
    """Negative control: a wrong coupling in the oracle must show up."""
    spec = spec_1q_se()
    res = cross_validate(spec)
    wrong = engine_tau2(spec_1q_se(g=1.3 * S))
    deviation = abs(wrong.tau2 / res.oracle_tau2 - 1.0)
    assert deviation > 0.2


def test_infinite_tau2_cross_validation():
    res = cross_validate(spec_1q_se(g=0.0))
    assert math.isinf(res.engine_tau2)
    assert res.passed
