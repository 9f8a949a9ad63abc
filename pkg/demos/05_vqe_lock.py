"""Lock a VQE state and compare both readouts on it."""
import numpy as np

from fusionreadout.estimator import FR, PS_QWC, Workload, run_cell
from fusionreadout.fib import build_hamiltonian
from fusionreadout.simulator import basis_state, run
from fusionreadout.workloads import LockedState, vqe_optimize

n, d = 5, 3
h = build_hamiltonian(n)
ground = np.linalg.eigvalsh(h.dense_full())[0]

# %% Optimise
locked = vqe_optimize(n, d, h, seed=0)
print(f"reference energy {locked.reference_energy:+.6f}")
print(f"achieved energy  {locked.achieved_energy:+.6f} (ground {ground:+.6f}) after {locked.iterations} iterations")

# the locked parameters survive a JSON round trip and rebuild the same state
again = LockedState.from_json(locked.to_json())
psi = run(again.circuit(), basis_state("0" * n))
print("energy of the rebuilt state:", h.energy(psi))

# %% Both readouts on the locked state
wl = Workload.vqe(locked)
for N in (2000, 8000):
    for method in (FR, PS_QWC):
        cell = run_cell(wl, method, N, 20)
        print(f"N={N} {method:>6}: MSE {cell.empirical_mse:.3e}, mean sampling var {cell.mean_sampling_var:.3e}")
