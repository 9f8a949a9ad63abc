"""Fusion readout versus grouped Pauli sampling on the Fibonacci anyon chain."""

__version__ = "0.1.0"

from .analysis import crossover, fit_scaling, pearson_r, win_table
from .circuit import Circuit, Gate, compose, gate_counts, inverse
from .estimator import FR, PS_QWC, Workload, allocate_shots, build_plan, run_cell, run_replicate
from .fib import b_matrix, build_hamiltonian, f_matrix, fusion_valid, r_matrix, u_b_gate, u_f_gate
from .lowering import lower_to_basis
from .pauli import PauliSum, decompose, group_qwc, qwc_commutes
from .simulator import NoiseModel, expectation, run, run_noisy, sample_counts
from .workloads import AnsatzSpec, FloquetSpec, floquet_circuit, vqe_ansatz_circuit, vqe_optimize
