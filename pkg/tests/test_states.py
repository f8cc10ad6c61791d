import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decotime.states import (CavityState, QubitRegisterState, build_state,
                             cavity_moments)

from conftest import random_sparse_state

# Dense Pauli matrices in the basis (|0>, |1>); the brute-force oracle for
# every structured expectation rule below.
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[-1.0, 0.0], [0.0, 1.0]])


def dense_expect(state, ops):
    """<prod sigma> via explicit 2^N linear algebra, independent of states.py."""
    n = state.n_qubits
    vec = state.dense_vector()
    out = vec.copy()
    for site, axis in ops:
        mat = SX if axis == "X" else SZ
        full = np.zeros_like(out)
        dim = 1 << n
        for idx in range(dim):
            bit = (idx >> site) & 1
            for other in range(2):
                amp = mat[other, bit]
                if amp != 0:
                    target = (idx & ~(1 << site)) | (other << site)
                    full[target] += amp * out[idx]
        out = full
    return float(np.real(np.vdot(vec, out)))


# -- construction ------------------------------------------------------------

def test_structured_hadamard_is_symbolic_at_huge_n():
    state = build_state("hadamard", 10_000)
    assert state.expect_pauli(9_999, "X") == 1.0
    assert state.expect_pauli_pair(0, 9_999, "X", "X") == 1.0


def test_ghz_materialises_to_expected_amplitudes():
    sp = build_state("ghz", 3).to_sparse()
    assert set(sp.amplitudes) == {0, 7}
    assert sp.amplitudes[0] == pytest.approx(1 / np.sqrt(2))
    assert sp.amplitudes[7] == pytest.approx(1 / np.sqrt(2))


def test_sparse_kept_as_given_when_normalised():
    state = build_state({0: 0.6, 3: 0.8}, 2)
    assert state.amplitudes[0] == pytest.approx(0.6)
    assert state.amplitudes[3] == pytest.approx(0.8)


def test_zero_vector_rejected():
    with pytest.raises(ValueError, match="zero norm"):
        build_state({0: 0.0}, 2)


def test_out_of_range_index_rejected():
    with pytest.raises(IndexError, match="out of range"):
        build_state({4: 1.0}, 2)


def test_badly_normalised_rejected_small_deviation_fixed():
    state = build_state({0: 1.0 + 3e-7}, 1)      # renormalised silently
    assert abs(state.amplitudes[0]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError, match="norm"):
        build_state({0: 1.1}, 1)


def test_amplitude_file_roundtrip(tmp_path):
    path = tmp_path / "state.txt"
    path.write_text("# GHZ of 2 qubits\n0 0.70710678118654752,0\n3 0,0.70710678118654752\n")
    state = QubitRegisterState.from_amplitude_file(path, 2)
    assert state.amplitudes[3] == pytest.approx(1j / np.sqrt(2))


# -- single expectations against the spec's pinned values ---------------------

@pytest.mark.parametrize("tag,axis,value", [
    ("hadamard", "X", 1.0), ("hadamard", "Z", 0.0),
    ("ghz", "X", 0.0), ("ghz", "Z", 0.0),
    ("allzero", "X", 0.0), ("allzero", "Z", -1.0),
])
def test_single_site_structured(tag, axis, value):
    state = build_state(tag, 3)
    for i in range(3):
        assert state.expect_pauli(i, axis) == pytest.approx(value, abs=1e-15)


def test_pair_rules_match_8_dim_brute_force():
    # frozen from the dense oracle: GHZ(3) XX = 0, GHZ(2) XX = 1, ZZ = 1
    ghz3 = build_state("ghz", 3)
    assert dense_expect(ghz3, ((0, "X"), (1, "X"))) == pytest.approx(0.0, abs=1e-14)
    assert ghz3.expect_pauli_pair(0, 1, "X", "X") == pytest.approx(0.0, abs=1e-14)
    ghz2 = build_state("ghz", 2)
    assert dense_expect(ghz2, ((0, "X"), (1, "X"))) == pytest.approx(1.0)
    assert ghz2.expect_pauli_pair(0, 1, "X", "X") == pytest.approx(1.0)
    for n in (2, 3, 4):
        ghz = build_state("ghz", n)
        assert dense_expect(ghz, ((0, "Z"), (n - 1, "Z"))) == pytest.approx(1.0)
        assert ghz.expect_pauli_pair(0, n - 1, "Z", "Z") == pytest.approx(1.0)


def test_same_site_pair_is_flagged_misuse():
    state = build_state("hadamard", 2)
    with pytest.raises(ValueError, match="identity"):
        state.expect_pauli_pair(1, 1, "X", "X")


def test_sigma_y_rejected():
    state = build_state("hadamard", 2)
    with pytest.raises(ValueError, match="Y"):
        state.expect_pauli(0, "Y")


@pytest.mark.parametrize("tag", ["hadamard", "ghz", "allzero", "w"])
@pytest.mark.parametrize("n", [2, 3, 5])
def test_structured_vs_materialised_agree(tag, n):
    state = build_state(tag, n)
    sparse = state.to_sparse()
    for i in range(n):
        for axis in "XZ":
            assert sparse.expect_pauli(i, axis) == pytest.approx(
                state.expect_pauli(i, axis), abs=1e-12)
        for j in range(n):
            if i == j:
                continue
            for aa in "XZ":
                for ab in "XZ":
                    assert sparse.expect_pauli_pair(i, j, aa, ab) == pytest.approx(
                        state.expect_pauli_pair(i, j, aa, ab), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=10**6))
def test_sparse_expectations_bounded_and_match_dense(n, seed):
    rng = np.random.default_rng(seed)
    state = random_sparse_state(rng, n)
    for i in range(n):
        for axis in "XZ":
            val = state.expect_pauli(i, axis)
            assert -1.0 - 1e-12 <= val <= 1.0 + 1e-12
            assert val == pytest.approx(dense_expect(state, ((i, axis),)), abs=1e-12)
    if n >= 2:
        val = state.expect_pauli_pair(0, n - 1, "X", "Z")
        assert -1.0 - 1e-12 <= val <= 1.0 + 1e-12
        assert val == pytest.approx(dense_expect(state, ((0, "X"), (n - 1, "Z"))), abs=1e-12)


def test_covariance_matrix_is_psd(rng):
    for tag, n in [("hadamard", 4), ("ghz", 4), ("w", 5), ("allzero", 3)]:
        state = build_state(tag, n)
        x, _, xx, _, _ = state.moment_matrices()
        m = xx - np.outer(x, x)
        np.fill_diagonal(m, 1.0 - x ** 2)
        assert np.linalg.eigvalsh(m)[0] >= -1e-12
    for _ in range(10):
        state = random_sparse_state(rng, 4)
        x, _, xx, _, _ = state.moment_matrices()
        m = xx - np.outer(x, x)
        assert np.linalg.eigvalsh(m)[0] >= -1e-12


# -- factorisation test --------------------------------------------------------

def test_is_uncorrelated():
    assert build_state("hadamard", 6).is_uncorrelated(1e-10)
    assert build_state("allzero", 6).is_uncorrelated(1e-10)
    assert not build_state("ghz", 2).is_uncorrelated(1e-10)   # 1 != 0 * 0
    bell = build_state({0b01: 1 / np.sqrt(2), 0b10: 1 / np.sqrt(2)}, 2)
    assert not bell.is_uncorrelated(1e-10)


def test_is_uncorrelated_cost_guard():
    state = QubitRegisterState(21, tag="sparse", amplitudes={0: 1.0})
    with pytest.raises(ValueError, match="N > 20"):
        state.is_uncorrelated(1e-10)


# -- cavity moments ------------------------------------------------------------

def test_cavity_moment_table():
    vac = cavity_moments(CavityState.vacuum())
    assert (vac.b, vac.n, vac.n_plus, vac.b2) == (0j, 0.0, 1.0, 0j)
    coh = cavity_moments(CavityState.coherent(0.5 + 0.2j))
    assert coh.b == 0.5 + 0.2j
    assert coh.n == pytest.approx(abs(0.5 + 0.2j) ** 2)
    assert coh.b2 == pytest.approx((0.5 + 0.2j) ** 2)
    f2 = cavity_moments(CavityState.fock(2))
    assert (f2.b, f2.n, f2.n_plus) == (0j, 2.0, 3.0)


def test_cavity_moment_invariants():
    for cs in (CavityState.vacuum(), CavityState.fock(3), CavityState.coherent(1.2j)):
        m = cavity_moments(cs)
        assert m.n_plus == pytest.approx(m.n + 1.0)
        assert m.n >= abs(m.b) ** 2 - 1e-12    # Cauchy-Schwarz
