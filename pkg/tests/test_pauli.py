from concurrent.futures import ThreadPoolExecutor
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusionreadout.circuit import Circuit
from fusionreadout.pauli import (
    PauliError,
    PauliSum,
    apply_string,
    basis_rotation,
    decompose,
    group_measurement_circuit,
    group_qwc,
    parity_signs,
    pauli_expectation_from_counts,
    qwc_commutes,
    string_matrix,
)
from fusionreadout.simulator import basis_state, circuit_unitary, expectation, random_state, run

pauli_strings = st.text(alphabet="IXYZ", min_size=4, max_size=4)


def random_hermitian(k, rng):
    a = rng.normal(size=(2**k, 2**k)) + 1j * rng.normal(size=(2**k, 2**k))
    return (a + a.conj().T) / 2


def test_string_matrix_order():
    # qubit 0 is the left factor
    np.testing.assert_allclose(string_matrix("ZI"), np.diag([1, 1, -1, -1]))
    np.testing.assert_allclose(string_matrix("IZ"), np.diag([1, -1, 1, -1]))


def test_decompose_roundtrip(rng):
    for k in (3, 4):
        for _ in range(50):
            op = random_hermitian(k, rng)
            ps = decompose(op, 0, k)
            assert np.max(abs(ps.to_matrix() - op)) < 1e-10


def test_decompose_embeds_window(rng):
    op = random_hermitian(3, rng)
    ps = decompose(op, 1, 5)
    np.testing.assert_allclose(ps.to_matrix(), np.kron(np.kron(np.eye(2), op), np.eye(2)), atol=1e-10)


def test_decompose_rejects_non_hermitian():
    with pytest.raises(PauliError, match="not Hermitian"):
        decompose(np.triu(np.ones((8, 8))), 0, 3)
    with pytest.raises(PauliError):
        decompose(np.eye(8), 3, 5)


def test_f3_term_expansion(h5):
    t = h5.terms[0]
    assert np.max(abs(decompose(t.dense_op, 0, 5).to_matrix() - t.embedded())) < 1e-10


def test_pauli_sum_merges_and_cuts():
    ps = PauliSum([(0.5, "XZ"), (0.25, "XZ"), (1e-14, "YY"), (-0.75, "XZ")], 2)
    assert ps.entries == []
    ps = PauliSum([(1.0, "XI"), (2.0, "XI")])
    assert ps.entries == [(3.0, "XI")]
    with pytest.raises(PauliError):
        PauliSum([(1.0, "XI"), (1.0, "X")])


def test_pauli_sum_records_roundtrip(h5):
    ps = h5.pauli_sum
    back = PauliSum.from_records(ps.to_records(), 5)
    assert back.entries == ps.entries


def test_apply_matches_matrix(rng):
    psi = random_state(4, rng)
    for s in ("XYZI", "ZZZZ", "IYII"):
        np.testing.assert_allclose(apply_string(s, psi), string_matrix(s) @ psi, atol=1e-12)


@given(pauli_strings, pauli_strings)
def test_qwc_is_symmetric_and_implies_commutation(a, b):
    assert qwc_commutes(a, b) == qwc_commutes(b, a)
    if qwc_commutes(a, b):
        ma, mb = string_matrix(a), string_matrix(b)
        assert np.allclose(ma @ mb, mb @ ma)


def test_qwc_examples():
    assert qwc_commutes("XIZ", "XYI")
    assert not qwc_commutes("XZ", "ZX")
    # commuting but not qubit-wise commuting
    assert not qwc_commutes("XX", "ZZ")
    with pytest.raises(PauliError):
        qwc_commutes("X", "XX")


def _assert_sound(gs):
    seen = []
    for g in range(len(gs)):
        members = gs.group_strings(g)
        seen += members
        for a, b in itertools.combinations(members, 2):
            assert qwc_commutes(a, b)
        for s in members:
            for q, c in enumerate(s):
                if c != "I":
                    assert gs.bases[g][q] == c
    assert sorted(seen) == sorted(gs.strings)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2, allow_nan=False), pauli_strings), min_size=1, max_size=40))
def test_grouping_soundness_property(entries):
    gs = group_qwc(entries)
    _assert_sound(gs)
    assert group_qwc(list(entries)) == gs


def test_grouping_hamiltonian(h5, h7):
    for h in (h5, h7):
        gs = group_qwc(h.pauli_sum)
        _assert_sound(gs)


def test_group_counts():
    # deterministic heuristic counts; the reference pipeline reported 15 (n=5) and 22 (n=11)
    from fusionreadout.estimator import global_grouping
    from fusionreadout.fib import build_hamiltonian

    assert len(global_grouping(build_hamiltonian(5))) == 19
    assert len(global_grouping(build_hamiltonian(7))) == 26


def test_grouping_thread_determinism(h7):
    entries = h7.pauli_sum.entries
    ref = group_qwc(entries)
    with ThreadPoolExecutor(8) as pool:
        results = list(pool.map(lambda _: group_qwc(entries), range(16)))
    assert all(r == ref for r in results)


def test_basis_rotations_diagonalize():
    z = np.diag([1, -1])
    for letter in "XY":
        v = basis_rotation(letter, 0).unitary()
        np.testing.assert_allclose(v @ string_matrix(letter) @ v.conj().T, z, atol=1e-12)
    assert basis_rotation("Z", 0) is None


def test_group_circuit_maps_to_z():
    # X on q0 and Y on q2: conjugating the full string gives all-Z on its support
    c = group_measurement_circuit({0: "X", 2: "Y"}, 3)
    assert len(c.gates) == 2
    u = circuit_unitary(c)
    np.testing.assert_allclose(u @ string_matrix("XIY") @ u.conj().T, string_matrix("ZIZ"), atol=1e-12)


def test_parity_signs():
    signs = parity_signs(["ZII", "IZZ", "III"], 3)
    for idx in range(8):
        b = format(idx, "03b")
        assert signs[0, idx] == (-1) ** int(b[0])
        assert signs[1, idx] == (-1) ** (int(b[1]) + int(b[2]))
        assert signs[2, idx] == 1


def test_counts_estimator_exact_on_basis_state():
    bits = "10110"
    counts = {bits: 1000}
    strings = ["ZIIII", "IZZII", "ZIZZZ", "IIIIZ"]
    est = pauli_expectation_from_counts(strings, counts)
    psi = basis_state(bits)
    for s in strings:
        assert est[s] == expectation(psi, string_matrix(s))


def test_counts_estimator_group_form():
    gs = group_qwc([(1.0, "ZZ"), (0.5, "ZI")])
    est = pauli_expectation_from_counts((gs, 0), {"01": 3, "11": 1})
    assert est == {"ZZ": (-3 + 1) / 4, "ZI": (3 - 1) / 4}
    with pytest.raises(PauliError, match="empty histogram"):
        pauli_expectation_from_counts(["ZZ"], {})


def test_group_circuit_expectation(rng):
    # exact expectation through the rotated readout equals the direct value
    psi = random_state(3, rng)
    c = group_measurement_circuit({0: "X", 1: "Y", 2: "Z"}, 3)
    rotated = run(c, psi)
    probs = abs(rotated) ** 2
    signs = parity_signs(["ZZZ"], 3)[0]
    assert probs @ signs == pytest.approx(expectation(psi, string_matrix("XYZ")), abs=1e-12)
    assert isinstance(c, Circuit)
