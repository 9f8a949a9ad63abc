"""Deterministic lowering of circuits to one-qubit rotations and CZ.

Two-qubit dense blocks use a KAK (magic-basis) factorisation followed by the
three-CNOT canonical-gate circuit. Three-qubit blocks are accepted when they
are doubly controlled single-qubit unitaries (any target position); they are
expanded with the square-root construction

    CC(V) = C_b(W) . CX(a, b) . C_b(W†) . CX(a, b) . C_a(W),   W @ W = V

and each singly controlled ``W`` uses the two-CNOT ``A X B X C`` form.
Every CNOT becomes ``H . CZ . H`` and adjacent one-qubit factors produced by
one source gate are fused and emitted as ``Rz Ry Rz``.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import schur

from .circuit import (
    LOWERED_KINDS,
    Circuit,
    CircuitError,
    Gate,
    rz_matrix,
    ry_matrix,
)

_ANGLE_TOL = 1e-12
_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

_MAGIC = np.array(
    [[1, 1j, 0, 0], [0, 0, 1j, 1], [0, 0, 1j, -1], [1, -1j, 0, 0]], dtype=complex
) / np.sqrt(2)
_MAGIC_DAG = _MAGIC.conj().T
# diagonal of XX, YY, ZZ in the magic basis, with a constant column for the phase
_CANONICAL_SIGNS = np.column_stack(
    [np.ones(4)]
    + [np.real(np.diag(_MAGIC_DAG @ np.kron(p, p) @ _MAGIC)) for p in (_X, _Y, _Z)]
)


def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Angles ``(a, b, c)`` with ``u ~ Rz(a) Ry(b) Rz(c)`` up to global phase."""
    su = u / np.sqrt(np.linalg.det(u))
    b = 2 * np.arctan2(abs(su[1, 0]), abs(su[0, 0]))
    plus = 2 * np.angle(su[1, 1]) if abs(su[1, 1]) > 1e-14 else 0.0
    minus = 2 * np.angle(su[1, 0]) if abs(su[1, 0]) > 1e-14 else 0.0
    return (plus + minus) / 2, b, (plus - minus) / 2


def _emit_one_qubit(u: np.ndarray, q: int) -> list[Gate]:
    a, b, c = zyz_angles(u)
    out = []
    for kind, theta in (("rz", c), ("ry", b), ("rz", a)):
        theta = float(np.remainder(theta + np.pi, 4 * np.pi) - np.pi)
        if abs(theta) > _ANGLE_TOL and abs(abs(theta) - 4 * np.pi) > _ANGLE_TOL:
            out.append(Gate(kind, (q,), (theta,)))
    return out


class _Sequence:
    """Accumulates one-qubit matrices per qubit between CZ gates."""

    def __init__(self):
        self.gates: list[Gate] = []
        self.pending: dict[int, np.ndarray] = {}

    def one(self, q: int, u: np.ndarray):
        self.pending[q] = u @ self.pending.get(q, _I2)

    def _flush(self, qubits):
        for q in sorted(qubits):
            if q in self.pending:
                self.gates.extend(_emit_one_qubit(self.pending.pop(q), q))

    def cz(self, a: int, b: int):
        self._flush((a, b))
        self.gates.append(Gate("cz", (min(a, b), max(a, b))))

    def cx(self, control: int, target: int):
        self.one(target, _H)
        self.cz(control, target)
        self.one(target, _H)

    def finish(self) -> list[Gate]:
        self._flush(list(self.pending))
        return self.gates


def _kron_factor(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a 4x4 product ``a ⊗ b`` into its factors."""
    r = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    if s[1] > 1e-8:
        raise CircuitError("block is not a tensor product of one-qubit gates")
    a = (np.sqrt(s[0]) * u[:, 0]).reshape(2, 2)
    b = (np.sqrt(s[0]) * vh[0, :]).reshape(2, 2)
    return a, b


def _real_orthogonal_diagonalizer(m: np.ndarray) -> np.ndarray:
    # m is complex symmetric and unitary, so Re m and Im m commute
    for c in (0.6180339887498949, 1.4142135623730951, 2.718281828459045, 0.3183098861837907):
        _, p = np.linalg.eigh(m.real + c * m.imag)
        d = p.T @ m @ p
        if np.max(np.abs(d - np.diag(np.diag(d)))) < 1e-9:
            if np.linalg.det(p) < 0:
                p[:, 0] = -p[:, 0]
            return p
    raise CircuitError("failed to diagonalise the magic-basis Gram matrix")


def kak_decompose(u: np.ndarray):
    """Factor a two-qubit unitary as ``(a1⊗b1) exp(i(cx XX + cy YY + cz ZZ)) (a2⊗b2)``.

    Returns ``((a1, b1), (cx, cy, cz), (a2, b2))``, exact up to global phase.
    """
    u = np.asarray(u, dtype=complex)
    su = u / np.linalg.det(u) ** 0.25
    up = _MAGIC_DAG @ su @ _MAGIC
    p = _real_orthogonal_diagonalizer(up.T @ up)
    d = np.diag(p.T @ up.T @ up @ p)
    half = np.sqrt(d)
    k1 = up @ p @ np.diag(1 / half)
    if np.linalg.det(k1.real) < 0:
        half[0] = -half[0]
        k1 = up @ p @ np.diag(1 / half)
    left = _kron_factor(_MAGIC @ k1.real @ _MAGIC_DAG)
    right = _kron_factor(_MAGIC @ p.T @ _MAGIC_DAG)
    coeffs = np.linalg.solve(_CANONICAL_SIGNS, np.angle(half))
    return left, tuple(float(c) for c in coeffs[1:]), right


def _lower_two_qubit(m: np.ndarray, q0: int, q1: int) -> list[Gate]:
    (a1, b1), (cx, cy, cz), (a2, b2) = kak_decompose(m)
    seq = _Sequence()
    seq.one(q0, a2)
    seq.one(q1, b2)
    # exp(i(cx XX + cy YY + cz ZZ)) with three CNOTs
    seq.one(q1, rz_matrix(-np.pi / 2))
    seq.cx(q1, q0)
    seq.one(q0, rz_matrix(np.pi / 2 - 2 * cz))
    seq.one(q1, ry_matrix(2 * cx - np.pi / 2))
    seq.cx(q0, q1)
    seq.one(q1, ry_matrix(np.pi / 2 - 2 * cy))
    seq.cx(q1, q0)
    seq.one(q0, rz_matrix(np.pi / 2))
    seq.one(q0, a1)
    seq.one(q1, b1)
    return seq.finish()


def _unitary_sqrt(v: np.ndarray) -> np.ndarray:
    t, z = schur(v, output="complex")
    return z @ np.diag(np.sqrt(np.diag(t))) @ z.conj().T


def _controlled_one_qubit(seq: _Sequence, w: np.ndarray, control: int, target: int):
    """Append ``C(w)`` using two CNOTs (``w = e^{ia} A X B X C`` with ``ABC = I``)."""
    alpha = np.angle(np.linalg.det(w)) / 2
    beta, gamma, delta = zyz_angles(w)
    a = rz_matrix(beta) @ ry_matrix(gamma / 2)
    b = ry_matrix(-gamma / 2) @ rz_matrix(-(delta + beta) / 2)
    c = rz_matrix((delta - beta) / 2)
    seq.one(target, c)
    seq.cx(control, target)
    seq.one(target, b)
    seq.cx(control, target)
    seq.one(target, a)
    seq.one(control, rz_matrix(alpha))


def doubly_controlled_structure(m: np.ndarray):
    """Return ``(target_position, V)`` if ``m`` is CC(V) on 3 qubits, else ``None``.

    The controls are the two other positions and fire on ``|11>``.
    """
    if m.shape != (8, 8):
        return None
    t = m.reshape((2,) * 6)
    for target in range(3):
        a, b = [p for p in range(3) if p != target]
        blk = np.moveaxis(t, [a, b, target, 3 + a, 3 + b, 3 + target], [0, 1, 2, 3, 4, 5])
        ok = True
        for ca in (0, 1):
            for cb in (0, 1):
                for ca2 in (0, 1):
                    for cb2 in (0, 1):
                        sub = blk[ca, cb, :, ca2, cb2, :]
                        if (ca, cb) != (ca2, cb2):
                            want = np.zeros((2, 2))
                        elif (ca, cb) == (1, 1):
                            continue
                        else:
                            want = _I2
                        if np.max(np.abs(sub - want)) > 1e-10:
                            ok = False
        if ok:
            return target, np.array(blk[1, 1, :, 1, 1, :])
    return None


def _lower_doubly_controlled(v: np.ndarray, ctrl_a: int, ctrl_b: int, target: int) -> list[Gate]:
    w = _unitary_sqrt(v)
    seq = _Sequence()
    _controlled_one_qubit(seq, w, ctrl_b, target)
    seq.cx(ctrl_a, ctrl_b)
    _controlled_one_qubit(seq, w.conj().T, ctrl_b, target)
    seq.cx(ctrl_a, ctrl_b)
    _controlled_one_qubit(seq, w, ctrl_a, target)
    return seq.finish()


def lower_gate(gate: Gate) -> list[Gate]:
    if gate.kind in LOWERED_KINDS:
        return [gate]
    if gate.kind == "zexp":
        return [Gate("rz", gate.qubits, (2.0 * gate.params[0],))]
    m, qs = gate.matrix, gate.qubits
    if gate.arity == 1:
        return _emit_one_qubit(m, qs[0])
    if gate.arity == 2:
        return _lower_two_qubit(m, qs[0], qs[1])
    if gate.arity == 3:
        found = doubly_controlled_structure(m)
        if found is not None:
            target, v = found
            ca, cb = [qs[p] for p in range(3) if p != target]
            return _lower_doubly_controlled(v, ca, cb, qs[target])
    raise CircuitError(
        f"no lowering rule for {gate.arity}-qubit dense block {gate.label or ''} on {qs}".replace("  ", " ")
    )


def lower_to_basis(circuit: Circuit) -> Circuit:
    """Rewrite ``circuit`` using only one-qubit rotations, X and CZ."""
    out: list[Gate] = []
    for g in circuit.gates:
        out.extend(lower_gate(g))
    return Circuit(circuit.n, tuple(out), circuit.name)
