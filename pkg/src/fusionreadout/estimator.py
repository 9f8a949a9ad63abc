"""Fixed-budget energy estimators for fusion readout (FR) and grouped Pauli sampling (PS_QWC).

Per replicate the term estimates ``o_hat`` are unweighted operator
expectations; the energy is ``w . o_hat`` and the sampling variance
``w . Sigma_hat . w`` with ``Sigma_hat`` the plug-in covariance of ``o_hat``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, compose, gate_counts
from .fib import HamiltonianSpec, build_hamiltonian
from .lowering import lower_to_basis
from .pauli import QwcGroupSet, group_measurement_circuit, group_qwc, parity_signs
from .simulator import NOISELESS, NoiseModel, probabilities, run, run_noisy, zero_state
from .workloads import DEFAULT_DT, AnsatzSpec, FloquetSpec, default_depth, floquet_circuit, vqe_ansatz_circuit

FR = "FR"
PS_QWC = "PS_QWC"
METHODS = (FR, PS_QWC)


class MissingLockedState(RuntimeError):
    """A VQE cell was requested without frozen ansatz parameters."""


def derive_seed(master_seed: int, *keys) -> np.random.SeedSequence:
    """Seed that depends only on ``master_seed`` and ``keys``, never on call order."""
    digest = hashlib.sha256(json.dumps([int(master_seed), *map(str, keys)]).encode()).digest()
    return np.random.SeedSequence(int.from_bytes(digest[:16], "little"))


def allocate_shots(total: int, units: int) -> list[int]:
    """Split ``total`` shots as evenly as possible; the first ``total % units`` get one extra."""
    if units < 1:
        raise ValueError("need at least one measurement unit")
    if total < units:
        raise ValueError("budget below one shot per unit")
    base, extra = divmod(total, units)
    return [base + 1] * extra + [base] * (units - extra)


def global_grouping(h: HamiltonianSpec) -> QwcGroupSet:
    """QWC groups over the union of every term's strings, ordered by merged weight."""
    return group_qwc([e for t in h.terms for e in t.pauli_expansion.entries])


@dataclass(frozen=True, eq=False)
class MeasurementUnit:
    """One measurement circuit with its shot count.

    ``strings`` are the Pauli strings read from this unit's counts (a single
    one-site ``Z`` string for FR) and ``coeffs[l, a]`` is the contribution of
    string ``a`` to the unweighted term estimate ``o_hat[l]``.
    """

    suffix: Circuit
    shots: int
    strings: tuple[str, ...]
    coeffs: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class MeasurementPlan:
    method: str
    units: tuple[MeasurementUnit, ...]
    weights: np.ndarray = field(repr=False)

    @property
    def total_shots(self) -> int:
        return sum(u.shots for u in self.units)

    @property
    def n_terms(self) -> int:
        return self.weights.size


def build_plan(method: str, h: HamiltonianSpec, grouping: QwcGroupSet | None, total_shots: int) -> MeasurementPlan:
    n, L = h.n, len(h.terms)
    if method == FR:
        shots = allocate_shots(total_shots, L)
        units = []
        for l, term in enumerate(h.terms):
            coeffs = np.zeros((L, 1))
            coeffs[l, 0] = 1.0
            z = "".join("Z" if q == term.native_observable_qubit else "I" for q in range(n))
            units.append(MeasurementUnit(term.native_basis_change, shots[l], (z,), coeffs))
    elif method == PS_QWC:
        if grouping is None:
            grouping = global_grouping(h)
        home = grouping.group_of()
        per_group: list[dict[str, np.ndarray]] = [dict() for _ in range(len(grouping))]
        for l, term in enumerate(h.terms):
            for c, s in term.pauli_observable.entries:
                if s not in home:
                    raise RuntimeError(f"string {s} of term {l} is missing from the grouping")
                row = per_group[home[s]].setdefault(s, np.zeros(L))
                row[l] += c
        shots = allocate_shots(total_shots, len(grouping))
        units = []
        for g in range(len(grouping)):
            strings = tuple(grouping.group_strings(g))
            coeffs = np.stack([per_group[g].get(s, np.zeros(L)) for s in strings], axis=1)
            suffix = group_measurement_circuit(grouping.bases[g], n, f"PS-group-{g}")
            units.append(MeasurementUnit(suffix, shots[g], strings, coeffs))
    else:
        raise ValueError(f"unknown method {method!r}")
    plan = MeasurementPlan(method, tuple(units), h.weights)
    assert plan.total_shots == total_shots
    return plan


@dataclass
class ReplicateResult:
    method: str
    o_hat: np.ndarray
    energy: float
    sigma_hat: np.ndarray
    sampling_var: float
    counts_digest: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "sampling_var": self.sampling_var,
            "o_hat": self.o_hat.tolist(),
            "counts_digest": self.counts_digest,
        }


def unit_statistics(counts: np.ndarray, signs: np.ndarray):
    """Mean and sample covariance of the per-shot eigenvalue vectors from outcome counts."""
    shots = counts.sum()
    weighted = signs * counts
    mean = weighted.sum(axis=1) / shots
    if shots < 2:
        return mean, np.zeros((len(signs), len(signs)))
    second = (weighted.astype(float) @ signs.T.astype(float)) / shots
    cov = (second - np.outer(mean, mean)) * shots / (shots - 1)
    return mean, cov


class StatePreparation:
    """Caches everything about one prep circuit that does not depend on the budget."""

    def __init__(self, prep: Circuit, h: HamiltonianSpec):
        self.prep, self.h, self.n = prep, h, prep.n
        self.state = run(prep, zero_state(self.n))
        self.e_exact = h.energy(self.state)
        self._probs: dict = {}
        self._lowered: dict = {}
        self._signs: dict = {}

    def signs(self, strings) -> np.ndarray:
        if strings not in self._signs:
            self._signs[strings] = parity_signs(strings, self.n)
        return self._signs[strings]

    def noiseless_probabilities(self, suffix: Circuit, q_readout: float = 0.0) -> np.ndarray:
        key = (suffix.name, len(suffix), q_readout)
        if key not in self._probs:
            self._probs[key] = probabilities(run(suffix, self.state), q_readout)
        return self._probs[key]

    def lowered(self, suffix: Circuit) -> Circuit:
        key = (suffix.name, len(suffix))
        if key not in self._lowered:
            if "prep" not in self._lowered:
                self._lowered["prep"] = lower_to_basis(self.prep)
            self._lowered[key] = compose(self._lowered["prep"], lower_to_basis(suffix))
        return self._lowered[key]


def _sample_unit(prepared: StatePreparation, unit: MeasurementUnit, regime: NoiseModel, rng, mode: str):
    n = prepared.n
    noisy_gates = regime.enabled and (regime.p1 > 0 or regime.p2 > 0)
    if not noisy_gates:
        p = prepared.noiseless_probabilities(unit.suffix, regime.readout)
        return rng.multinomial(unit.shots, p)
    circuit = prepared.lowered(unit.suffix)
    if mode == "per_shot":
        counts = np.zeros(2**n, dtype=np.int64)
        for _ in range(unit.shots):
            psi = run_noisy(circuit, zero_state(n), regime, rng)
            counts += rng.multinomial(1, probabilities(psi, regime.readout))
        return counts
    psi = run_noisy(circuit, zero_state(n), regime, rng)
    return rng.multinomial(unit.shots, probabilities(psi, regime.readout))


def run_replicate(
    prep: Circuit | StatePreparation,
    plan: MeasurementPlan,
    regime: NoiseModel = NOISELESS,
    seed=0,
    *,
    hamiltonian: HamiltonianSpec | None = None,
    mode: str = "batched",
) -> ReplicateResult:
    """One full rerun of the estimator at the plan's total budget."""
    if not isinstance(prep, StatePreparation):
        h = hamiltonian if hamiltonian is not None else build_hamiltonian(prep.n)
        prep = StatePreparation(prep, h)
    if mode not in ("batched", "per_shot"):
        raise ValueError(f"unknown trajectory mode {mode!r}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    L = plan.n_terms
    o_hat = np.zeros(L)
    sigma = np.zeros((L, L))
    digest = hashlib.sha256()
    for unit, child in zip(plan.units, ss.spawn(len(plan.units))):
        if unit.shots < 1:
            raise ValueError("measurement unit with zero shots")
        rng = np.random.default_rng(child)
        counts = _sample_unit(prep, unit, regime, rng, mode)
        digest.update(counts.astype("<i8").tobytes())
        mean, cov = unit_statistics(counts, prep.signs(unit.strings))
        o_hat += unit.coeffs @ mean
        sigma += unit.coeffs @ (cov / unit.shots) @ unit.coeffs.T
    sigma = (sigma + sigma.T) / 2
    w = plan.weights
    var = float(w @ sigma @ w)
    return ReplicateResult(
        method=plan.method,
        o_hat=o_hat,
        energy=float(w @ o_hat),
        sigma_hat=sigma,
        sampling_var=max(var, 0.0) if var > -1e-12 else var,
        counts_digest=digest.hexdigest()[:16],
        seed=int(ss.entropy) if isinstance(ss.entropy, int) else 0,
    )


@dataclass(frozen=True)
class Workload:
    """State-preparation family member: digital Floquet ``(n, s)`` or locked VQE ``(n, d)``."""

    kind: str
    n: int
    s: int | None = None
    d: int | None = None
    dt: float = DEFAULT_DT
    j_f3: float = 1.0
    j_bf4: float = 0.5
    theta: tuple[float, ...] | None = None

    @classmethod
    def digital(cls, n: int, s: int, dt: float = DEFAULT_DT, j_f3: float = 1.0, j_bf4: float = 0.5):
        return cls("digital", n, s=s, dt=dt, j_f3=j_f3, j_bf4=j_bf4)

    @classmethod
    def vqe(cls, locked, j_f3: float = 1.0, j_bf4: float = 0.5):
        return cls("vqe", locked.n, d=locked.d, theta=tuple(locked.theta), j_f3=j_f3, j_bf4=j_bf4)

    @property
    def key(self) -> str:
        if self.kind == "digital":
            return f"digital/n{self.n}/s{self.s}"
        return f"vqe/n{self.n}/d{self.d if self.d is not None else default_depth(self.n)}"

    def prep_circuit(self) -> Circuit:
        if self.kind == "digital":
            return floquet_circuit(FloquetSpec(self.n, self.s, self.dt, self.j_f3, self.j_bf4))
        if self.kind == "vqe":
            if self.theta is None:
                raise MissingLockedState(f"no locked VQE parameters for n={self.n}; run the lock stage first")
            return vqe_ansatz_circuit(AnsatzSpec(self.n, self.d, self.theta))
        raise ValueError(f"unknown workload kind {self.kind!r}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n}
        if self.kind == "digital":
            out.update(s=self.s, dt=self.dt)
        else:
            out.update(d=self.d)
        out.update(j_f3=self.j_f3, j_bf4=self.j_bf4)
        return out


class CellContext:
    """Budget-independent state shared by every cell of one workload."""

    def __init__(self, workload: Workload):
        self.workload = workload
        self.h = build_hamiltonian(workload.n, workload.j_f3, workload.j_bf4)
        self.grouping = global_grouping(self.h)
        self.prepared = StatePreparation(workload.prep_circuit(), self.h)
        self._counts: dict = {}

    @property
    def e_exact(self) -> float:
        return self.prepared.e_exact

    def plan(self, method: str, total_shots: int) -> MeasurementPlan:
        return build_plan(method, self.h, self.grouping, total_shots)

    def measurement_gate_counts(self, method: str) -> tuple[int, int]:
        """Summed (1Q, 2Q) counts of every lowered measurement suffix."""
        if method not in self._counts:
            plan = self.plan(method, len(self.h.terms) + len(self.grouping))
            tallies = [gate_counts(lower_to_basis(u.suffix)) for u in plan.units]
            self._counts[method] = (sum(a for a, _ in tallies), sum(b for _, b in tallies))
        return self._counts[method]


@dataclass
class CellResult:
    workload: dict
    workload_key: str
    regime: str
    method: str
    shots: int
    replicates: int
    energies: list[float]
    sampling_vars: list[float]
    e_exact: float
    empirical_mse: float
    mse_se: float
    mean_sampling_var: float
    gate_counts_1q: int
    gate_counts_2q: int
    n_units: int
    trajectory_mode: str
    counts_digests: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def cell_key(self) -> str:
        return f"{self.workload_key}/{self.regime}/N{self.shots}"

    @property
    def measurement_count(self) -> int:
        return self.gate_counts_1q + self.gate_counts_2q

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CellResult":
        return cls(**data)


def mse_statistics(energies, e_exact: float) -> tuple[float, float]:
    """Empirical MSE and the replicate standard error of the squared errors."""
    sq = (np.asarray(energies, dtype=float) - e_exact) ** 2
    mse = float(sq.mean())
    if sq.size < 2:
        return mse, float("nan")
    s_sq = np.sqrt(np.sum((sq - mse) ** 2) / (sq.size - 1))
    return mse, float(s_sq / np.sqrt(sq.size))


def run_cell(
    workload: Workload,
    method: str,
    total_shots: int,
    replicates: int,
    regime: NoiseModel = NOISELESS,
    master_seed: int = 0,
    *,
    regime_label: str | None = None,
    context: CellContext | None = None,
    mode: str = "batched",
) -> CellResult:
    """Run ``replicates`` independent estimator replicates at budget ``total_shots``."""
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if context is None:
        context = CellContext(workload)
    label = regime_label or ("noisy" if regime.active else "noiseless")
    plan = context.plan(method, total_shots)
    cell_id = f"{workload.key}/{label}/{method}/N{total_shots}"
    reps = [
        run_replicate(context.prepared, plan, regime, derive_seed(master_seed, cell_id, r), mode=mode)
        for r in range(replicates)
    ]
    energies = [r.energy for r in reps]
    mse, se = mse_statistics(energies, context.e_exact)
    c1, c2 = context.measurement_gate_counts(method)
    return CellResult(
        workload=workload.to_dict(),
        workload_key=workload.key,
        regime=label,
        method=method,
        shots=total_shots,
        replicates=replicates,
        energies=energies,
        sampling_vars=[r.sampling_var for r in reps],
        e_exact=context.e_exact,
        empirical_mse=mse,
        mse_se=se,
        mean_sampling_var=float(np.mean([r.sampling_var for r in reps])),
        gate_counts_1q=c1,
        gate_counts_2q=c2,
        n_units=len(plan.units),
        trajectory_mode=mode if regime.active else "exact",
        counts_digests=[r.counts_digest for r in reps],
        meta={"groups": len(context.grouping), "noise": regime.to_dict()},
    )


def pooled_gap_se(cell_fr: CellResult, cell_ps: CellResult) -> float:
    if cell_fr.replicates < 2 or cell_ps.replicates < 2:
        raise ValueError("pooled standard error needs at least two replicates per cell")
    return float(np.hypot(cell_fr.mse_se, cell_ps.mse_se))


def exact_term_values(state, h: HamiltonianSpec, method: str) -> np.ndarray:
    """Noise-free limit of ``o_hat``: exact readout expectations in place of sample means."""
    n = h.n
    out = np.zeros(len(h.terms))
    if method == FR:
        for l, term in enumerate(h.terms):
            rotated = run(term.native_basis_change, state)
            probs = np.abs(rotated) ** 2
            site_bit = (np.arange(2**n) >> (n - 1 - term.native_observable_qubit)) & 1
            out[l] = float(np.sum(probs * (1 - 2 * site_bit)))
        return out
    grouping = global_grouping(h)
    plan = build_plan(PS_QWC, h, grouping, len(grouping))
    for unit in plan.units:
        rotated = run(unit.suffix, state)
        probs = np.abs(rotated) ** 2
        means = parity_signs(unit.strings, n) @ probs
        out += unit.coeffs @ means
    return out
