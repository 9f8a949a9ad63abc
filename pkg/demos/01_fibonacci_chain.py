"""Fibonacci anyon chain: category data, fusion-path encoding and the Hamiltonian.

Run with ``python demos/01_fibonacci_chain.py``.
"""
import numpy as np

from fusionreadout.fib import (
    PHI,
    b_matrix,
    build_hamiltonian,
    f_matrix,
    fusion_valid,
    r_matrix,
    valid_mask,
)
from fusionreadout.simulator import basis_state, circuit_unitary, random_state, run

np.set_printoptions(precision=4, suppress=True)

# %% Category data
# F is a real symmetric involution built from the golden ratio.
F = f_matrix()
print("phi =", PHI)
print("F =\n", F)
print("|F^2 - I| =", np.max(abs(F @ F - np.eye(2))))

# R is diagonal with tenth roots of unity; the braid in the fusion-tree basis is F^dagger R F.
print("R phases / pi =", np.angle(np.diag(r_matrix())) / np.pi)
B = b_matrix()
print("B unitary:", np.allclose(B @ B.conj().T, np.eye(2)))

# %% Fusion-path encoding
# Qubit value 1 is the tau label, 0 the vacuum; two adjacent vacua are forbidden.
for bits in ("11111", "10101", "10011"):
    print(bits, "valid" if fusion_valid(bits) else "invalid")
for n in (5, 7, 9, 11):
    print(f"n={n}: {valid_mask(n).sum()} of {2**n} basis states are fusion valid")

# %% Hamiltonian
# F3 terms on every 3-site window, BF4 terms on every 4-site window: 2n - 5 terms.
h = build_hamiltonian(5)
for t in h.terms:
    print(f"{t.kind:>3} window {t.window} weight {t.weight} -> read Z on qubit {t.native_observable_qubit}, "
          f"{len(t.pauli_expansion.entries)} Pauli strings")

H = h.dense_full()
print("<1..1|H|1..1> =", H[-1, -1].real, "(5*sqrt(5) - 11 =", 5 * np.sqrt(5) - 11, ")")
print("lowest eigenvalues:", np.linalg.eigvalsh(H)[:4])

# %% The two readings of one term agree
# Direct expectation of the term versus rotating into its native frame and reading one qubit.
rng = np.random.default_rng(0)
psi = random_state(5, rng)
z = np.diag([1.0, -1.0])
for t in h.terms:
    direct = np.vdot(psi, t.embedded(weighted=False) @ psi).real
    rotated = run(t.native_basis_change, psi)
    probs = abs(rotated.reshape((2,) * 5)) ** 2
    native = np.sum(np.moveaxis(probs, t.native_observable_qubit, 0).reshape(2, -1).sum(axis=1) * np.diag(z))
    print(f"{t.kind} @ {t.window_start}: direct {direct:+.6f}  native readout {native:+.6f}")

# the basis change is a genuine circuit on the register
print("BF4 basis change unitary shape:", circuit_unitary(h.terms[-1].native_basis_change).shape)
print("reference energy via circuit:", h.energy(basis_state("11111")))
