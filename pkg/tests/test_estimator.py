import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusionreadout.circuit import Circuit
from fusionreadout.estimator import (
    FR,
    PS_QWC,
    CellContext,
    MissingLockedState,
    StatePreparation,
    Workload,
    allocate_shots,
    build_plan,
    derive_seed,
    exact_term_values,
    global_grouping,
    mse_statistics,
    pooled_gap_se,
    run_cell,
    run_replicate,
    unit_statistics,
)
from fusionreadout.fib import HamiltonianSpec, TermSpec
from fusionreadout.pauli import PauliSum, parity_signs
from fusionreadout.simulator import NoiseModel, expectation, run, zero_state
from fusionreadout.workloads import AnsatzSpec, FloquetSpec, floquet_circuit, vqe_ansatz_circuit


def test_allocation_examples():
    assert allocate_shots(2000, 5) == [400] * 5
    assert allocate_shots(2000, 15) == [134] * 5 + [133] * 10
    assert allocate_shots(2000, 17) == [118] * 11 + [117] * 6
    with pytest.raises(ValueError, match="below one shot"):
        allocate_shots(4, 5)
    with pytest.raises(ValueError):
        allocate_shots(10, 0)


@given(st.integers(1, 10**6), st.integers(1, 500))
def test_allocation_property(total, units):
    if total < units:
        return
    shots = allocate_shots(total, units)
    assert sum(shots) == total and len(shots) == units
    assert max(shots) - min(shots) <= 1
    assert shots == sorted(shots, reverse=True)


def test_derive_seed_is_order_free():
    a = derive_seed(7, "cell", 3).generate_state(4)
    b = derive_seed(7, "cell", 3).generate_state(4)
    c = derive_seed(7, "cell", 4).generate_state(4)
    d = derive_seed(8, "cell", 3).generate_state(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_fr_plan_n5(h5):
    plan = build_plan(FR, h5, None, 2000)
    assert len(plan.units) == 5
    assert [u.shots for u in plan.units] == [400] * 5
    assert plan.units[0].strings == ("IZIII",)
    assert plan.units[3].strings == ("IIZII",)


def test_ps_plan_partition(h5):
    grouping = global_grouping(h5)
    plan = build_plan(PS_QWC, h5, grouping, 2000)
    assert len(plan.units) == len(grouping) == 19
    assert plan.total_shots == 2000
    seen = [s for u in plan.units for s in u.strings]
    assert len(seen) == len(set(seen))
    # every term string is reconstructed from exactly one unit
    for l, term in enumerate(h5.terms):
        for c, s in term.pauli_observable.entries:
            rows = [u.coeffs[l, u.strings.index(s)] for u in plan.units if s in u.strings]
            assert rows == [pytest.approx(c)]


def test_unknown_method(h5):
    with pytest.raises(ValueError):
        build_plan("FOO", h5, None, 100)


def _random_preps(n, count, rng):
    preps = [floquet_circuit(FloquetSpec(n, s, dt)) for s, dt in ((1, 0.1), (3, 0.37), (5, 0.8))]
    while len(preps) < count:
        preps.append(vqe_ansatz_circuit(AnsatzSpec(n, 2, rng.uniform(-np.pi, np.pi, 6 * n))))
    return preps


def test_exact_limit_equivalence(h5, rng):
    for prep in _random_preps(5, 20, rng):
        psi = run(prep, zero_state(5))
        fr = exact_term_values(psi, h5, FR)
        ps = exact_term_values(psi, h5, PS_QWC)
        dense = np.array([expectation(psi, t.embedded(weighted=False)) for t in h5.terms])
        assert np.max(abs(fr - ps)) < 1e-9
        assert np.max(abs(fr - dense)) < 1e-9


def test_unit_statistics_brute_force(rng):
    n = 3
    strings = ("ZZI", "IZZ", "ZIZ")
    signs = parity_signs(strings, n)
    counts = rng.multinomial(50, rng.dirichlet(np.ones(2**n)))
    mean, cov = unit_statistics(counts, signs)
    samples = np.repeat(signs.T, counts, axis=0).astype(float)
    np.testing.assert_allclose(mean, samples.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(cov, np.cov(samples, rowvar=False, ddof=1), atol=1e-12)


def _single_z_hamiltonian():
    obs = np.kron(np.diag([1.0, -1.0]), np.eye(4))
    term = TermSpec("F3", 0, 1.0, 3, Circuit(3), 0, obs, PauliSum([(1.0, "ZII")]))
    return HamiltonianSpec(3, 1.0, 0.5, (term,))


@pytest.mark.parametrize("method", [FR, PS_QWC])
def test_deterministic_single_term(method):
    h = _single_z_hamiltonian()
    plan = build_plan(method, h, None, 100)
    res = run_replicate(Circuit(3), plan, seed=1, hamiltonian=h)
    assert res.energy == 1.0
    assert res.sampling_var == 0.0


def test_fr_covariance_is_diagonal(h5):
    prep = floquet_circuit(FloquetSpec(5, 2))
    res = run_replicate(prep, build_plan(FR, h5, None, 2000), seed=3)
    off = res.sigma_hat - np.diag(np.diag(res.sigma_hat))
    assert np.count_nonzero(off) == 0


# module-level cache: hypothesis does not mix with function-scoped fixtures
_CACHE = {}


def _h5_cached():
    if "h" not in _CACHE:
        _CACHE["h"] = CellContext(Workload.digital(5, 1)).h
    return _CACHE["h"]


def _prep_cached():
    if "p" not in _CACHE:
        _CACHE["p"] = StatePreparation(floquet_circuit(FloquetSpec(5, 1)), _h5_cached())
    return _CACHE["p"]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([FR, PS_QWC]), st.integers(19, 400))
def test_covariance_psd(seed, method, shots):
    h = _h5_cached()
    prep = _prep_cached()
    res = run_replicate(prep, build_plan(method, h, None, shots), seed=seed)
    w = res.sigma_hat
    assert h.weights @ w @ h.weights >= -1e-12
    assert res.sampling_var >= -1e-12
    assert np.min(np.linalg.eigvalsh(w)) >= -1e-12


def test_replicate_rejects_bad_mode(h5):
    with pytest.raises(ValueError):
        run_replicate(Circuit(5), build_plan(FR, h5, None, 100), mode="fast")


@pytest.mark.parametrize("method", [FR, PS_QWC])
def test_unbiased_n5(method):
    wl = Workload.digital(5, 1)
    cell = run_cell(wl, method, 16000, 200, master_seed=11)
    e = np.asarray(cell.energies)
    assert abs(e.mean() - cell.e_exact) < 4 * e.std(ddof=1) / np.sqrt(e.size)
    # sampling variance is consistent with the replicate spread and with the MSE
    assert 0.6 < cell.mean_sampling_var / e.var(ddof=1) < 1.6
    assert abs(cell.empirical_mse - cell.mean_sampling_var) < 5 * cell.mse_se


def test_readout_flip_bias(h5):
    # independent flips with probability q shrink every FR single-site readout by 1 - 2q
    q = 0.05
    ctx = CellContext(Workload.digital(5, 2))
    exact = exact_term_values(ctx.prepared.state, h5, FR)
    plan = ctx.plan(FR, 5 * 200000)
    res = run_replicate(ctx.prepared, plan, NoiseModel(q_readout=q), seed=2)
    sd = np.sqrt(np.diag(res.sigma_hat))
    assert np.all(abs(res.o_hat - (1 - 2 * q) * exact) < 4 * sd)


def test_noisy_modes_run():
    wl = Workload.digital(5, 1)
    noise = NoiseModel(0.001, 0.01, 0.01)
    a = run_cell(wl, FR, 100, 2, noise, master_seed=1)
    b = run_cell(wl, FR, 100, 2, noise, master_seed=1, mode="per_shot")
    assert a.trajectory_mode == "batched" and b.trajectory_mode == "per_shot"
    assert a.regime == "noisy"
    assert a.energies == run_cell(wl, FR, 100, 2, noise, master_seed=1).energies


def test_cell_determinism_and_seeds():
    wl = Workload.digital(5, 2)
    a = run_cell(wl, PS_QWC, 2000, 3, master_seed=5)
    b = run_cell(wl, PS_QWC, 2000, 3, master_seed=5, context=CellContext(wl))
    c = run_cell(wl, PS_QWC, 2000, 3, master_seed=6)
    assert a.to_dict() == b.to_dict()
    assert a.energies != c.energies
    assert a.cell_key == "digital/n5/s2/noiseless/N2000"
    assert a.n_units == 19


def test_measurement_gate_counts_n5():
    ctx = CellContext(Workload.digital(5, 1))
    assert ctx.measurement_gate_counts(FR) == (210, 56)
    n1, n2 = ctx.measurement_gate_counts(PS_QWC)
    assert n2 == 0 and n1 > 0


def test_vqe_without_lock():
    with pytest.raises(MissingLockedState):
        Workload("vqe", 5, d=3).prep_circuit()


def test_mse_statistics_hand_cases():
    mse, se = mse_statistics([1.0, -1.0, 2.0], 0.0)
    assert mse == pytest.approx(2.0) and se == pytest.approx(1.0)
    mse, se = mse_statistics([0.7, 0.7, 0.7], 0.5)
    assert mse == pytest.approx(0.04) and se == 0.0


def test_pooled_gap_se():
    cell = run_cell(Workload.digital(5, 1), FR, 100, 2)
    a = dataclasses.replace(cell, mse_se=3.0)
    b = dataclasses.replace(cell, mse_se=4.0)
    assert pooled_gap_se(a, b) == 5.0
    assert pooled_gap_se(dataclasses.replace(a, mse_se=0.0), dataclasses.replace(b, mse_se=0.0)) == 0.0
    with pytest.raises(ValueError):
        pooled_gap_se(dataclasses.replace(a, replicates=1), b)


def test_cell_record_roundtrip():
    from fusionreadout.estimator import CellResult

    cell = run_cell(Workload.digital(5, 1), PS_QWC, 200, 2)
    assert CellResult.from_dict(cell.to_dict()) == cell
