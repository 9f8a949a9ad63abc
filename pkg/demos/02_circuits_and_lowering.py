"""Circuits: Floquet evolution, subspace preservation and lowering to one-qubit gates plus CZ."""
import numpy as np
import scipy.linalg as sl

from fusionreadout.circuit import Circuit, gate_counts
from fusionreadout.fib import build_hamiltonian, u_b_gate, u_f_gate, valid_mask
from fusionreadout.lowering import lower_to_basis
from fusionreadout.simulator import basis_state, circuit_unitary, expectation, run
from fusionreadout.workloads import FloquetSpec, floquet_circuit

# %% Lowering the controlled blocks
for gate in (u_f_gate(0, 3), u_b_gate(0, 3)):
    c = Circuit(3, (gate,))
    low = lower_to_basis(c)
    u, v = circuit_unitary(c), circuit_unitary(low)
    phase = np.vdot(v[:, 0], u[:, 0])
    print(f"{gate.label}: lowered to {gate_counts(low)} (1Q, CZ); error up to phase {np.max(abs(u - phase * v)):.1e}")

# %% Floquet circuits
n = 7
spec = FloquetSpec(n, s=3, dt=0.1)
circ = floquet_circuit(spec)
low = lower_to_basis(circ)
print(f"Floquet n={n} s=3: {len(circ)} dense gates, lowered counts {gate_counts(low)}")

psi = run(circ, basis_state("0" * n))
mask = valid_mask(n)
print("weight outside the fusion-valid subspace:", np.sum(abs(psi[~mask]) ** 2))

# %% Trotter error against exact evolution
h = build_hamiltonian(5)
H = h.dense_full()
t_total = 0.6
exact = sl.expm(-1j * H * t_total) @ basis_state("11111")
for dt in (0.2, 0.1, 0.05, 0.025):
    s = round(t_total / dt)
    trotter = run(floquet_circuit(FloquetSpec(5, s, dt)), basis_state("00000"))
    print(f"dt={dt:<6} s={s:<3} |E_trotter - E_exact| = {abs(h.energy(trotter) - expectation(exact, H)):.3e}")
