"""Fibonacci category data, fusion-path encoding and the chain Hamiltonian.

Each qubit stores one intermediate fusion label, ``|0> = 1`` (vacuum) and
``|1> = tau``. A label string is fusion-consistent when no two neighbouring
labels are both vacuum.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .circuit import Circuit, Gate
from .pauli import PauliSum, decompose

PHI = (1 + np.sqrt(5)) / 2
MAX_DENSE_QUBITS = 14
DEFAULT_J_F3 = 1.0
DEFAULT_J_BF4 = 0.5

_Z = np.diag([1.0, -1.0]).astype(complex)


def f_matrix() -> np.ndarray:
    """Recoupling move for three tau anyons with total charge tau."""
    a, b = 1 / PHI, PHI**-0.5
    return np.array([[a, b], [b, -a]], dtype=complex)


def r_matrix() -> np.ndarray:
    """Braiding phases of two tau anyons in the direct-fusion basis."""
    return np.diag([np.exp(-4j * np.pi / 5), np.exp(3j * np.pi / 5)])


def b_matrix() -> np.ndarray:
    """Braid in the chain's fusion-tree basis, ``F† R F``."""
    f = f_matrix()
    return f.conj().T @ r_matrix() @ f


def fusion_valid(bits) -> bool:
    """True when no two adjacent labels are both vacuum (``"00"``)."""
    s = "".join(str(b) for b in bits)
    if not s:
        raise ValueError("empty configuration")
    if set(s) - {"0", "1"}:
        raise ValueError(f"labels must be 0 or 1, got {s!r}")
    return "00" not in s


def valid_mask(n: int) -> np.ndarray:
    """Boolean mask over the ``2^n`` basis states marking fusion-valid strings."""
    idx = np.arange(2**n)
    # a "00" pair is present iff some adjacent bit pair is zero in both bits
    zeros = ~idx & (2**n - 1)
    return (zeros & (zeros >> 1)) == 0


def controlled_middle(v: np.ndarray) -> np.ndarray:
    """8x8 matrix applying ``v`` to the middle qubit when both outer qubits are ``|1>``."""
    m = np.eye(8, dtype=complex)
    sel = [0b101, 0b111]
    m[np.ix_(sel, sel)] = v
    return m


def _check_window(window_start: int, n: int | None, width: int = 3):
    if window_start < 0 or (n is not None and window_start + width > n):
        raise ValueError(f"window starting at {window_start} does not fit in {n} qubits")


def u_f_gate(window_start: int, n: int | None = None) -> Gate:
    """Controlled F move on qubits ``(j, j+1, j+2)``."""
    _check_window(window_start, n)
    j = window_start
    return Gate("unitary", (j, j + 1, j + 2), matrix=controlled_middle(f_matrix()), label=f"UF{j}")


def u_r_gate(window_start: int, n: int | None = None) -> Gate:
    _check_window(window_start, n)
    j = window_start
    return Gate("unitary", (j, j + 1, j + 2), matrix=controlled_middle(r_matrix()), label=f"UR{j}")


def u_b_gate(window_start: int, n: int | None = None) -> Gate:
    """Braid gate ``U_F (I ⊗ U_R ⊗ I) U_F†`` on ``(j, j+1, j+2)``."""
    _check_window(window_start, n)
    uf = controlled_middle(f_matrix())
    m = uf @ controlled_middle(r_matrix()) @ uf.conj().T
    j = window_start
    return Gate("unitary", (j, j + 1, j + 2), matrix=m, label=f"UB{j}")


def _window_unitary(gates, start: int, width: int) -> np.ndarray:
    """Product of gates (applied in order) as a matrix on ``start..start+width-1``."""
    from .simulator import apply_matrix

    dim = 2**width
    out = np.eye(dim, dtype=complex)
    for g in gates:
        local = tuple(q - start for q in g.qubits)
        out = np.stack([apply_matrix(out[:, c], g.unitary(), local, width) for c in range(dim)], axis=1)
    return out


@dataclass(frozen=True, eq=False)
class TermSpec:
    """One local term ``weight * U† Z_site U`` of the chain Hamiltonian."""

    kind: str
    window_start: int
    weight: float
    n: int
    native_basis_change: Circuit
    native_observable_qubit: int
    observable: np.ndarray = field(repr=False)
    pauli_observable: PauliSum = field(repr=False)

    @property
    def width(self) -> int:
        return 3 if self.kind == "F3" else 4

    @property
    def window(self) -> tuple[int, ...]:
        return tuple(range(self.window_start, self.window_start + self.width))

    @property
    def dense_op(self) -> np.ndarray:
        """Weighted operator on the term's own window."""
        return self.weight * self.observable

    @cached_property
    def pauli_expansion(self) -> PauliSum:
        return self.pauli_observable.scaled(self.weight)

    def embedded(self, weighted: bool = True) -> np.ndarray:
        """Dense ``2^n x 2^n`` operator on the full register."""
        m = self.dense_op if weighted else self.observable
        before, after = self.window_start, self.n - self.window_start - self.width
        return np.kron(np.kron(np.eye(2**before), m), np.eye(2**after))


def _make_term(kind: str, i: int, n: int, weight: float) -> TermSpec:
    if kind == "F3":
        gates, site, width = (u_f_gate(i, n),), i + 1, 3
    else:
        gates, site, width = (u_b_gate(i, n), u_f_gate(i + 1, n)), i + 2, 4
    u = _window_unitary(gates, i, width)
    z_local = np.kron(np.kron(np.eye(2 ** (site - i)), _Z), np.eye(2 ** (i + width - site - 1)))
    obs = u.conj().T @ z_local @ u
    obs = (obs + obs.conj().T) / 2
    return TermSpec(
        kind=kind,
        window_start=i,
        weight=float(weight),
        n=n,
        native_basis_change=Circuit(n, gates, f"FR-{kind}-{i}"),
        native_observable_qubit=site,
        observable=obs,
        pauli_observable=decompose(obs, i, n),
    )


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Open Fibonacci chain with F3 and BF4 terms on ``n`` qubits."""

    n: int
    j_f3: float
    j_bf4: float
    terms: tuple[TermSpec, ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    def window_ops(self, weighted: bool = True) -> list[tuple[np.ndarray, tuple[int, ...]]]:
        return [(t.dense_op if weighted else t.observable, t.window) for t in self.terms]

    @cached_property
    def pauli_sum(self) -> PauliSum:
        return PauliSum.sum(t.pauli_expansion for t in self.terms)

    def dense_full(self) -> np.ndarray:
        """Full Hamiltonian matrix; only for ``n <= 14``."""
        if self.n > MAX_DENSE_QUBITS:
            raise ValueError(f"refusing to materialise a dense {self.n}-qubit Hamiltonian")
        return sum(t.embedded() for t in self.terms)

    def energy(self, state: np.ndarray) -> float:
        from .simulator import expectation

        return expectation(state, self.window_ops())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "couplings": {"j_f3": self.j_f3, "j_bf4": self.j_bf4},
            "terms": [
                {
                    "kind": t.kind,
                    "window": list(t.window),
                    "weight": t.weight,
                    "native_observable_qubit": t.native_observable_qubit,
                    "pauli_expansion": t.pauli_expansion.to_records(),
                }
                for t in self.terms
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def build_hamiltonian(n: int, j_f3: float = DEFAULT_J_F3, j_bf4: float = DEFAULT_J_BF4) -> HamiltonianSpec:
    """F3 terms on windows ``(i, i+1, i+2)`` then BF4 terms on ``(i..i+3)``."""
    if n < 4:
        raise ValueError("chain too short for BF4 terms")
    terms = [_make_term("F3", i, n, j_f3) for i in range(n - 2)]
    terms += [_make_term("BF4", i, n, j_bf4) for i in range(n - 3)]
    return HamiltonianSpec(n, float(j_f3), float(j_bf4), tuple(terms))


def reference_bits(n: int) -> str:
    return "1" * n
