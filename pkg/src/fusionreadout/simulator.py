"""Dense statevector execution, sampling and trajectory noise."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitError, Gate, is_lowered

_PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class SimulationError(ValueError):
    pass


def basis_state(bits: str) -> np.ndarray:
    """Computational basis state for a bit string (qubit 0 leftmost)."""
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def zero_state(n: int) -> np.ndarray:
    return basis_state("0" * n)


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


def num_qubits(state: np.ndarray) -> int:
    n = int(state.size).bit_length() - 1
    if state.ndim != 1 or 2**n != state.size:
        raise SimulationError(f"state of length {state.size} is not a qubit register")
    return n


def apply_matrix(state: np.ndarray, matrix: np.ndarray, qubits, n: int) -> np.ndarray:
    """Apply a ``2^k x 2^k`` matrix to ``qubits`` of an ``n``-qubit state."""
    k = len(qubits)
    psi = state.reshape((2,) * n)
    op = np.asarray(matrix).reshape((2,) * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits)).reshape(-1)


def apply_gate(state: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    if gate.kind == "cz":
        psi = state.reshape((2,) * n).copy()
        idx = [slice(None)] * n
        idx[gate.qubits[0]] = 1
        idx[gate.qubits[1]] = 1
        psi[tuple(idx)] *= -1
        return psi.reshape(-1)
    return apply_matrix(state, gate.unitary(), gate.qubits, n)


def run(circuit: Circuit, initial: np.ndarray) -> np.ndarray:
    """Apply every gate of ``circuit`` to ``initial`` (not modified)."""
    n = num_qubits(initial)
    if n != circuit.n:
        raise SimulationError(f"circuit acts on {circuit.n} qubits, state has {n}")
    psi = np.array(initial, dtype=complex)
    for gate in circuit.gates:
        psi = apply_gate(psi, gate, n)
    return psi


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Full ``2^n x 2^n`` matrix of a circuit; small registers only."""
    dim = 2**circuit.n
    cols = [run(circuit, np.eye(dim, dtype=complex)[:, j]) for j in range(dim)]
    return np.stack(cols, axis=1)


def expectation(state: np.ndarray, obs) -> float:
    """Real expectation ``<psi|O|psi>``.

    ``obs`` is a dense ``2^n x 2^n`` matrix, a :class:`~fusionreadout.pauli.PauliSum`,
    or a list of ``(matrix, qubits)`` window operators to be summed.
    """
    n = num_qubits(state)
    if hasattr(obs, "apply"):
        if obs.n != n:
            raise SimulationError(f"observable on {obs.n} qubits, state has {n}")
        o_psi = obs.apply(state)
    elif isinstance(obs, (list, tuple)):
        o_psi = np.zeros_like(state)
        for matrix, qubits in obs:
            o_psi = o_psi + apply_matrix(state, matrix, qubits, n)
    else:
        obs = np.asarray(obs)
        if obs.shape != (state.size, state.size):
            raise SimulationError(f"observable shape {obs.shape} does not match state")
        o_psi = obs @ state
    value = np.vdot(state, o_psi)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise SimulationError(f"expectation has imaginary part {value.imag:.3e}; observable not Hermitian")
    return float(value.real)


def probabilities(state: np.ndarray, q_readout: float = 0.0) -> np.ndarray:
    """Outcome distribution, optionally passed through independent bit flips."""
    p = np.abs(state) ** 2
    p = p / p.sum()
    if q_readout > 0:
        n = num_qubits(state)
        flip = np.array([[1 - q_readout, q_readout], [q_readout, 1 - q_readout]])
        t = p.reshape((2,) * n)
        for q in range(n):
            t = np.moveaxis(np.tensordot(flip, t, axes=([1], [q])), 0, q)
        p = np.clip(t.reshape(-1), 0.0, None)
        p = p / p.sum()
    return p


def sample_outcomes(state: np.ndarray, shots: int, rng, q_readout: float = 0.0) -> np.ndarray:
    """Counts per basis index (length ``2^n``) from ``shots`` Born-rule draws."""
    if shots < 1:
        raise SimulationError("shots must be at least 1")
    rng = np.random.default_rng(rng)
    return rng.multinomial(shots, probabilities(state, q_readout))


def sample_counts(state: np.ndarray, shots: int, rng_seed, q_readout: float = 0.0) -> dict[str, int]:
    """Histogram of bit strings, deterministic for a fixed seed."""
    n = num_qubits(state)
    counts = sample_outcomes(state, shots, rng_seed, q_readout)
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


def counts_to_histogram(bitstrings) -> dict[str, int]:
    return dict(Counter(bitstrings))


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise plus independent readout bit flips.

    ``p1`` and ``p2`` are per-gate probabilities of a uniformly random
    non-identity Pauli on the touched qubit(s); ``q_readout`` flips each
    measured bit independently.
    """

    p1: float = 0.0
    p2: float = 0.0
    q_readout: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        for name in ("p1", "p2", "q_readout"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    @property
    def active(self) -> bool:
        return self.enabled and (self.p1 > 0 or self.p2 > 0 or self.q_readout > 0)

    @property
    def readout(self) -> float:
        return self.q_readout if self.enabled else 0.0

    def to_dict(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "q_readout": self.q_readout, "enabled": self.enabled}


NOISELESS = NoiseModel(enabled=False)


def _random_pauli(state: np.ndarray, qubits, n: int, rng: np.random.Generator) -> np.ndarray:
    k = len(qubits)
    # uniform over the 4^k - 1 non-identity strings
    code = int(rng.integers(1, 4**k))
    for q in qubits:
        code, letter = divmod(code, 4)
        if letter:
            state = apply_matrix(state, _PAULIS[letter - 1], (q,), n)
    return state


def run_noisy(circuit: Circuit, initial: np.ndarray, noise: NoiseModel, rng_seed) -> np.ndarray:
    """One Monte-Carlo trajectory of ``circuit`` under depolarizing gate noise.

    Readout flips are not applied here; pass ``noise.q_readout`` to the sampler.
    """
    if not is_lowered(circuit):
        raise CircuitError("noisy execution needs a circuit lowered to one-qubit gates and CZ")
    n = num_qubits(initial)
    if n != circuit.n:
        raise SimulationError(f"circuit acts on {circuit.n} qubits, state has {n}")
    rng = np.random.default_rng(rng_seed)
    psi = np.array(initial, dtype=complex)
    on = noise.enabled
    for gate in circuit.gates:
        psi = apply_gate(psi, gate, n)
        p = noise.p2 if gate.arity == 2 else noise.p1
        if on and p > 0 and rng.random() < p:
            psi = _random_pauli(psi, gate.qubits, n, rng)
    return psi


def dump_state(state: np.ndarray, path) -> None:
    """Write amplitudes as little-endian interleaved (re, im) doubles."""
    np.asarray(state, dtype="<c16").view("<f8").tofile(path)


def load_state(path) -> np.ndarray:
    return np.fromfile(path, dtype="<f8").view("<c16").astype(complex)
