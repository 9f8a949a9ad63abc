import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusionreadout.circuit import Circuit, CircuitError, Gate
from fusionreadout.fib import u_f_gate, valid_mask
from fusionreadout.pauli import string_matrix
from fusionreadout.simulator import (
    NOISELESS,
    NoiseModel,
    SimulationError,
    apply_gate,
    apply_matrix,
    basis_state,
    circuit_unitary,
    dump_state,
    expectation,
    load_state,
    probabilities,
    random_state,
    run,
    run_noisy,
    sample_counts,
    sample_outcomes,
)
from fusionreadout.workloads import FloquetSpec, floquet_circuit

from conftest import random_unitary


def test_basis_state_ordering():
    psi = basis_state("100")
    assert psi[4] == 1 and np.count_nonzero(psi) == 1
    # X on qubit 0 flips the most significant bit
    out = apply_gate(basis_state("000"), Gate("x", (0,)), 3)
    np.testing.assert_array_equal(out, psi)


def test_apply_matrix_matches_kron(rng):
    psi = random_state(4, rng)
    u = random_unitary(4, rng)
    full = np.kron(np.kron(np.eye(2), u), np.eye(2))
    np.testing.assert_allclose(apply_matrix(psi, u, (1, 2), 4), full @ psi, atol=1e-12)
    # reversed qubit tuple swaps the roles of the factors
    swap = np.eye(4)[[0, 2, 1, 3]]
    full_rev = np.kron(np.kron(np.eye(2), swap @ u @ swap), np.eye(2))
    np.testing.assert_allclose(apply_matrix(psi, u, (2, 1), 4), full_rev @ psi, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations([0, 1, 2, 3]))
def test_dense_gate_then_adjoint_restores(seed, perm):
    rng = np.random.default_rng(seed)
    qs = tuple(perm[:3])
    u = random_unitary(8, rng)
    psi = random_state(4, rng)
    g = Gate("unitary", qs, matrix=u)
    back = apply_gate(apply_gate(psi, g, 4), g.adjoint(), 4)
    assert np.max(abs(back - psi)) < 1e-10


def test_circuit_unitary_consistent_with_run(rng):
    c = Circuit(3, (u_f_gate(0), Gate("ry", (2,), (0.3,)), Gate("cz", (0, 2))))
    psi = random_state(3, rng)
    np.testing.assert_allclose(circuit_unitary(c) @ psi, run(c, psi), atol=1e-12)


def test_expectation_forms(rng, h5):
    psi = random_state(5, rng)
    dense = expectation(psi, h5.dense_full())
    assert expectation(psi, h5.pauli_sum) == pytest.approx(dense, abs=1e-10)
    assert expectation(psi, h5.window_ops()) == pytest.approx(dense, abs=1e-10)
    with pytest.raises(SimulationError, match="not Hermitian"):
        expectation(psi, np.triu(np.ones((32, 32))) * 1j)


def test_binomial_sampling():
    psi = np.array([1, 1]) / np.sqrt(2)
    counts = sample_counts(psi, 10**6, 123)
    freq = counts["0"] / 10**6
    assert abs(freq - 0.5) < 4 * 0.0005


def test_sampling_deterministic_for_seed(rng):
    psi = random_state(4, rng)
    assert sample_counts(psi, 1000, 7) == sample_counts(psi, 1000, 7)
    assert sample_outcomes(psi, 1000, 7).sum() == 1000
    with pytest.raises(SimulationError):
        sample_outcomes(psi, 0, 7)


def test_readout_flip_channel():
    # independent flips: P(1) = q for a |0> input, and P(11) = q^2 for two qubits
    p = probabilities(basis_state("00"), 0.1)
    np.testing.assert_allclose(p, [0.81, 0.09, 0.09, 0.01], atol=1e-15)


def test_depolarizing_full_limit():
    # p = 3/4 with uniform non-identity Paulis is the fully depolarizing channel
    c = Circuit(1, (Gate("rz", (0,), (0.0,)),))
    noise = NoiseModel(p1=0.75)
    trials = 20000
    z = [expectation(run_noisy(c, basis_state("0"), noise, s), np.diag([1, -1])) for s in range(trials)]
    assert abs(np.mean(z)) < 4 / np.sqrt(trials)


def test_depolarizing_partial():
    c = Circuit(1, (Gate("rz", (0,), (0.0,)), Gate("rz", (0,), (0.0,))))
    noise = NoiseModel(p1=0.3)
    trials = 20000
    z = np.array([expectation(run_noisy(c, basis_state("0"), noise, s), np.diag([1, -1])) for s in range(trials)])
    expected = (1 - 4 * 0.3 / 3) ** 2
    assert abs(z.mean() - expected) < 4 * z.std() / np.sqrt(trials)


def test_two_qubit_noise_touches_both():
    c = Circuit(2, (Gate("cz", (0, 1)),))
    seen = set()
    for s in range(300):
        out = run_noisy(c, basis_state("00"), NoiseModel(p2=1.0), s)
        seen.add(int(np.argmax(abs(out))))
    assert seen == {0, 1, 2, 3}


def test_noisy_requires_lowered():
    with pytest.raises(CircuitError):
        run_noisy(Circuit(3, (u_f_gate(0),)), basis_state("111"), NoiseModel(p1=0.1), 0)


def test_noise_model():
    assert not NOISELESS.active and NOISELESS.readout == 0.0
    assert NoiseModel(0.001, 0.01, 0.01).active
    with pytest.raises(ValueError):
        NoiseModel(p1=1.5)


def test_disabled_noise_is_exact(rng):
    c = Circuit(2, (Gate("rx", (0,), (0.4,)), Gate("cz", (0, 1))))
    psi = random_state(2, rng)
    off = NoiseModel(p1=1.0, p2=1.0, enabled=False)
    np.testing.assert_allclose(run_noisy(c, psi, off, 0), run(c, psi), atol=1e-15)


@pytest.mark.parametrize("n", [5, 7])
def test_floquet_subspace_preservation(n):
    mask = valid_mask(n)
    for s in range(1, 7):
        psi = run(floquet_circuit(FloquetSpec(n, s, dt=0.3)), basis_state("0" * n))
        assert np.sum(abs(psi[~mask]) ** 2) < 1e-8


def test_floquet_subspace_random_valid_input(rng):
    n = 5
    mask = valid_mask(n)
    psi = np.zeros(32, complex)
    psi[mask] = rng.normal(size=mask.sum()) + 1j * rng.normal(size=mask.sum())
    psi /= np.linalg.norm(psi)
    # drop the X preparation layer so the random valid input is evolved directly
    c = floquet_circuit(FloquetSpec(n, 3, dt=0.2))
    body = Circuit(n, c.gates[n:])
    out = run(body, psi)
    assert np.sum(abs(out[~mask]) ** 2) < 1e-8


def test_dump_load_roundtrip(tmp_path, rng):
    psi = random_state(3, rng)
    path = tmp_path / "psi.bin"
    dump_state(psi, path)
    raw = path.read_bytes()
    assert len(raw) == 16 * 8
    assert np.frombuffer(raw[:8], "<f8")[0] == psi[0].real
    np.testing.assert_array_equal(load_state(path), psi)


def test_pauli_expectation_matches_sampling_average():
    psi = run(Circuit(2, (Gate("ry", (0,), (1.0,)),)), basis_state("00"))
    exact = expectation(psi, string_matrix("ZI"))
    assert exact == pytest.approx(np.cos(1.0), abs=1e-12)
