"""Gate-list circuit representation.

Qubit 0 is the most significant bit of every basis index and the leftmost
character of every bit string. Dense gate matrices follow the same ordering
over their own ``qubits`` tuple.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ONE_QUBIT_KINDS = ("rx", "ry", "rz", "x")
LOWERED_KINDS = ONE_QUBIT_KINDS + ("cz",)
GATE_KINDS = LOWERED_KINDS + ("unitary", "zexp")

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


class CircuitError(ValueError):
    """Raised for malformed gates or circuits."""


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate of a circuit.

    ``kind`` is one of ``rx, ry, rz, x, cz, unitary, zexp``. Rotations carry
    their angle in ``params``; ``zexp`` is ``exp(-i * params[0] * Z)``;
    ``unitary`` carries a dense matrix over ``qubits`` (at most 4).
    """

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    matrix: np.ndarray | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(qubits)) != len(qubits) or any(q < 0 for q in qubits):
            raise CircuitError(f"invalid qubit tuple {qubits}")
        arity = {"cz": 2, "unitary": len(qubits)}.get(self.kind, 1)
        if len(qubits) != arity:
            raise CircuitError(f"{self.kind} acts on {arity} qubit(s), got {qubits}")
        if self.kind in ("rx", "ry", "rz", "zexp") and len(self.params) != 1:
            raise CircuitError(f"{self.kind} takes exactly one angle")
        if self.kind == "unitary":
            if self.matrix is None or not 1 <= len(qubits) <= 4:
                raise CircuitError("dense unitary needs a matrix on 1 to 4 qubits")
            m = np.array(self.matrix, dtype=complex)
            m.setflags(write=False)
            dim = 2 ** len(qubits)
            if m.shape != (dim, dim):
                raise CircuitError(f"matrix shape {m.shape} does not match {len(qubits)} qubits")
            err = np.max(np.abs(m @ m.conj().T - np.eye(dim)))
            if err > 1e-10:
                raise CircuitError(f"dense block is not unitary (max deviation {err:.2e})")
            object.__setattr__(self, "matrix", m)

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def unitary(self) -> np.ndarray:
        """Matrix of the gate over its own qubits."""
        if self.kind == "unitary":
            return self.matrix
        if self.kind == "cz":
            return _CZ
        if self.kind == "x":
            return _X
        theta = self.params[0]
        if self.kind == "zexp":
            return rz_matrix(2.0 * theta)
        return {"rx": rx_matrix, "ry": ry_matrix, "rz": rz_matrix}[self.kind](theta)

    def adjoint(self) -> "Gate":
        if self.kind in ("rx", "ry", "rz", "zexp"):
            return Gate(self.kind, self.qubits, (-self.params[0],), label=self.label)
        if self.kind == "unitary":
            m = self.matrix
            if np.array_equal(m, m.conj().T):
                return self
            label = self.label[:-1] if self.label.endswith("†") else self.label + "†" if self.label else ""
            return Gate("unitary", self.qubits, matrix=m.conj().T, label=label)
        return self

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.kind, self.qubits, self.params, self.label) != (
            other.kind, other.qubits, other.params, other.label
        ):
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is other.matrix
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.kind, self.qubits, self.params, self.label))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.params:
            out["params"] = list(self.params)
        if self.label:
            out["label"] = self.label
        if self.matrix is not None:
            out["matrix"] = [[[z.real, z.imag] for z in row] for row in self.matrix.tolist()]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        matrix = None
        if "matrix" in data:
            matrix = np.array([[complex(re, im) for re, im in row] for row in data["matrix"]])
        return cls(
            data["kind"],
            tuple(data["qubits"]),
            tuple(data.get("params", ())),
            matrix=matrix,
            label=data.get("label", ""),
        )


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``n`` qubits; gates apply left to right."""

    n: int
    gates: tuple[Gate, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n:
                raise CircuitError(f"gate on {g.qubits} outside a {self.n}-qubit register")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def to_dict(self) -> dict:
        return {"n": self.n, "name": self.name, "gates": [g.to_dict() for g in self.gates]}

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        return cls(data["n"], tuple(Gate.from_dict(g) for g in data["gates"]), data.get("name", ""))


def compose(a: Circuit, b: Circuit, name: str | None = None) -> Circuit:
    """Gates of ``a`` followed by gates of ``b``."""
    if a.n != b.n:
        raise CircuitError(f"register size mismatch: {a.n} vs {b.n}")
    if name is None:
        name = "+".join(x for x in (a.name, b.name) if x)
    return Circuit(a.n, a.gates + b.gates, name)


def inverse(c: Circuit) -> Circuit:
    """Adjoint circuit: reversed order, every gate replaced by its adjoint."""
    name = c.name[:-1] if c.name.endswith("†") else (c.name + "†" if c.name else "")
    return Circuit(c.n, tuple(g.adjoint() for g in reversed(c.gates)), name)


def is_lowered(c: Circuit) -> bool:
    return all(g.kind in LOWERED_KINDS for g in c.gates)


def gate_counts(c: Circuit) -> tuple[int, int]:
    """Return ``(one_qubit, two_qubit)`` tallies of a lowered circuit."""
    n1 = n2 = 0
    for g in c.gates:
        if g.kind not in LOWERED_KINDS:
            raise CircuitError(f"gate {g.kind!r} is not in the lowered basis; call lower_to_basis first")
        if g.kind == "cz":
            n2 += 1
        else:
            n1 += 1
    return n1, n2
