"""Pauli strings, Pauli-sum decompositions and qubit-wise commuting groups.

A Pauli string is a plain ``str`` over ``IXYZ`` whose character ``q`` acts
on qubit ``q``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .circuit import Circuit, Gate

COEFF_CUTOFF = 1e-12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliError(ValueError):
    pass


def check_string(s: str) -> str:
    if not s or set(s) - set("IXYZ"):
        raise PauliError(f"invalid Pauli string {s!r}")
    return s


def string_matrix(s: str) -> np.ndarray:
    return reduce(np.kron, (PAULI_MATRICES[c] for c in s))


def support(s: str) -> tuple[int, ...]:
    return tuple(q for q, c in enumerate(s) if c != "I")


def apply_string(s: str, state: np.ndarray) -> np.ndarray:
    """``P |psi>`` without building the ``2^n`` matrix."""
    from .simulator import apply_matrix

    n = len(s)
    for q, c in enumerate(s):
        if c != "I":
            state = apply_matrix(state, PAULI_MATRICES[c], (q,), n)
    return state


class PauliSum:
    """Real-weighted sum of Pauli strings on ``n`` qubits.

    Duplicate strings are merged and entries below ``COEFF_CUTOFF`` dropped.
    """

    def __init__(self, entries=(), n: int | None = None):
        terms: dict[str, float] = {}
        for coeff, s in entries:
            check_string(s)
            if n is None:
                n = len(s)
            elif len(s) != n:
                raise PauliError(f"string {s!r} does not have length {n}")
            terms[s] = terms.get(s, 0.0) + float(np.real(coeff))
        if n is None:
            raise PauliError("empty PauliSum needs an explicit register size")
        self.n = n
        self.terms = {s: c for s, c in terms.items() if abs(c) >= COEFF_CUTOFF}

    @property
    def entries(self) -> list[tuple[float, str]]:
        return [(c, s) for s, c in self.terms.items()]

    @property
    def strings(self) -> list[str]:
        return list(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        body = " + ".join(f"{c:.6g}*{s}" for c, s in self.entries[:6])
        more = "" if len(self) <= 6 else f" + ... ({len(self)} terms)"
        return f"PauliSum({body}{more})"

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(((factor * c, s) for c, s in self.entries), self.n)

    @classmethod
    def sum(cls, sums) -> "PauliSum":
        sums = list(sums)
        return cls((e for ps in sums for e in ps.entries), sums[0].n if sums else None)

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n
        out = np.zeros((dim, dim), dtype=complex)
        for c, s in self.entries:
            out += c * string_matrix(s)
        return out

    def apply(self, state: np.ndarray) -> np.ndarray:
        out = np.zeros_like(state, dtype=complex)
        for c, s in self.entries:
            out += c * apply_string(s, state)
        return out

    def to_records(self) -> list[dict]:
        return [{"coeff": c, "string": s} for c, s in self.entries]

    @classmethod
    def from_records(cls, records, n: int | None = None) -> "PauliSum":
        return cls(((r["coeff"], r["string"]) for r in records), n)


def decompose(op: np.ndarray, window_start: int, n: int) -> PauliSum:
    """Pauli expansion of a Hermitian ``k``-qubit window operator on ``n`` qubits.

    Coefficients are ``Tr(P op) / 2^k`` over the ``4^k`` window strings.
    """
    op = np.asarray(op, dtype=complex)
    dim = op.shape[0]
    k = dim.bit_length() - 1
    if op.shape != (dim, dim) or 2**k != dim or k > 4:
        raise PauliError(f"expected a 2^k x 2^k matrix with k <= 4, got shape {op.shape}")
    if window_start < 0 or window_start + k > n:
        raise PauliError(f"window {window_start}..{window_start + k - 1} outside {n} qubits")
    anti = np.max(np.abs(op - op.conj().T))
    if anti > 1e-10:
        raise PauliError(f"operator is not Hermitian (max anti-Hermitian entry {anti:.3e})")
    pad_l, pad_r = "I" * window_start, "I" * (n - window_start - k)
    entries = []
    for letters in itertools.product("IXYZ", repeat=k):
        local = "".join(letters)
        coeff = np.trace(string_matrix(local) @ op).real / dim
        entries.append((coeff, pad_l + local + pad_r))
    return PauliSum(entries, n)


def qwc_commutes(a: str, b: str) -> bool:
    """Letterwise compatibility: equal letters or an identity at every site."""
    if len(a) != len(b):
        raise PauliError(f"length mismatch: {len(a)} vs {len(b)}")
    return all(x == y or x == "I" or y == "I" for x, y in zip(a, b))


@dataclass(frozen=True)
class QwcGroupSet:
    """Partition of ``strings`` into qubit-wise commuting groups.

    ``groups[g]`` holds indices into ``strings``; ``bases[g]`` maps each
    measured qubit to its letter.
    """

    strings: tuple[str, ...]
    coefficients: tuple[float, ...]
    groups: tuple[tuple[int, ...], ...]
    bases: tuple[dict, ...]

    @property
    def n(self) -> int:
        return len(self.strings[0])

    def __len__(self) -> int:
        return len(self.groups)

    def group_strings(self, g: int) -> list[str]:
        return [self.strings[i] for i in self.groups[g]]

    def group_of(self) -> dict[str, int]:
        return {self.strings[i]: g for g, idx in enumerate(self.groups) for i in idx}

    def to_dict(self) -> dict:
        return {
            "groups": [self.group_strings(g) for g in range(len(self))],
            "bases": [{str(q): b for q, b in sorted(basis.items())} for basis in self.bases],
        }


def group_qwc(entries) -> QwcGroupSet:
    """Greedy sequential colouring into qubit-wise commuting groups.

    Strings are visited by descending ``|coefficient|`` (ties broken by the
    letter sequence) and placed in the first group they are compatible with.

    Args:
        entries: ``(coefficient, string)`` pairs or a :class:`PauliSum`.
    """
    if isinstance(entries, PauliSum):
        entries = entries.entries
    merged: dict[str, float] = {}
    for c, s in entries:
        check_string(s)
        merged[s] = merged.get(s, 0.0) + float(c)
    if not merged:
        raise PauliError("nothing to group")
    order = sorted(merged, key=lambda s: (-round(abs(merged[s]), 10), s))
    bases: list[dict] = []
    members: list[list[int]] = []
    for idx, s in enumerate(order):
        for g, basis in enumerate(bases):
            if all(basis.get(q, c) == c for q, c in enumerate(s) if c != "I"):
                members[g].append(idx)
                basis.update({q: c for q, c in enumerate(s) if c != "I"})
                break
        else:
            bases.append({q: c for q, c in enumerate(s) if c != "I"})
            members.append([idx])
    return QwcGroupSet(
        strings=tuple(order),
        coefficients=tuple(merged[s] for s in order),
        groups=tuple(tuple(m) for m in members),
        bases=tuple(dict(sorted(b.items())) for b in bases),
    )


def basis_rotation(letter: str, q: int) -> Gate | None:
    """Rotation taking the ``letter`` eigenbasis on qubit ``q`` to the Z basis."""
    if letter == "X":
        return Gate("ry", (q,), (-np.pi / 2,))
    if letter == "Y":
        return Gate("rx", (q,), (np.pi / 2,))
    return None


def group_measurement_circuit(basis: dict, n: int, name: str = "") -> Circuit:
    """One layer of basis rotations; all qubits are read out afterwards."""
    gates = [basis_rotation(basis[q], q) for q in sorted(basis)]
    return Circuit(n, tuple(g for g in gates if g is not None), name)


def parity_signs(strings, n: int) -> np.ndarray:
    """``(len(strings), 2^n)`` array of ``(-1)^{parity}`` over each string's support.

    Outcomes are indexed by basis integer with qubit 0 the most significant bit.
    """
    idx = np.arange(2**n)
    out = np.empty((len(strings), 2**n), dtype=np.int8)
    for r, s in enumerate(strings):
        mask = sum(1 << (n - 1 - q) for q in support(s))
        bits = idx & mask
        par = np.zeros_like(idx)
        while mask:
            par ^= (bits & 1)
            bits >>= 1
            mask >>= 1
        out[r] = 1 - 2 * par
    return out


def pauli_expectation_from_counts(strings, counts: dict[str, int]) -> dict[str, float]:
    """Estimate each string's expectation from a computational-basis histogram.

    ``strings`` may be a list of strings or a ``(QwcGroupSet, group_index)`` pair.
    """
    if isinstance(strings, tuple) and len(strings) == 2 and isinstance(strings[0], QwcGroupSet):
        strings = strings[0].group_strings(strings[1])
    total = sum(counts.values())
    if total <= 0:
        raise PauliError("empty histogram")
    out = {}
    for s in strings:
        sup = support(s)
        acc = 0
        for bits, c in counts.items():
            acc += c * (-1) ** sum(bits[q] == "1" for q in sup)
        out[s] = acc / total
    return out
