"""State-preparation circuits: digital Floquet evolution and the locked VQE ansatz."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .circuit import Circuit, Gate, inverse
from .fib import DEFAULT_J_BF4, DEFAULT_J_F3, HamiltonianSpec, u_b_gate, u_f_gate
from .simulator import apply_gate, apply_matrix, basis_state, expectation

log = logging.getLogger(__name__)

DEFAULT_DT = 0.1


def default_depth(n: int) -> int:
    return 4 if n >= 11 else 3


@dataclass(frozen=True)
class FloquetSpec:
    n: int
    s: int
    dt: float = DEFAULT_DT
    j_f3: float = DEFAULT_J_F3
    j_bf4: float = DEFAULT_J_BF4

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("step count must be non-negative")
        if self.dt <= 0:
            raise ValueError("Trotter step must be positive")


def preparation_layer(n: int) -> list[Gate]:
    """X on every qubit: ``|0...0>`` to the reference ``|1...1>``."""
    return [Gate("x", (q,)) for q in range(n)]


def floquet_step(spec: FloquetSpec) -> list[Gate]:
    """One step: F3 sweep then BF4 sweep, each factor ``exp(-i dt J H_l)``."""
    n, dt = spec.n, spec.dt
    gates: list[Gate] = []
    for j in range(n - 2):
        uf = u_f_gate(j, n)
        gates += [uf, Gate("zexp", (j + 1,), (dt * spec.j_f3,)), uf.adjoint()]
    for j in range(n - 3):
        basis = Circuit(n, (u_b_gate(j, n), u_f_gate(j + 1, n)))
        gates += list(basis.gates)
        gates.append(Gate("zexp", (j + 2,), (dt * spec.j_bf4,)))
        gates += list(inverse(basis).gates)
    return gates


def floquet_circuit(spec: FloquetSpec) -> Circuit:
    if spec.n < 4:
        raise ValueError("chain too short for BF4 terms")
    step = floquet_step(spec)
    return Circuit(spec.n, tuple(preparation_layer(spec.n) + step * spec.s), f"floquet-n{spec.n}-s{spec.s}")


def n_parameters(n: int, d: int) -> int:
    return 2 * n * (d + 1)


@dataclass(frozen=True)
class AnsatzSpec:
    """Ry-Rz + CZ ansatz; ``theta[2*(layer*n + q)]`` is the Ry angle, ``+1`` the Rz angle."""

    n: int
    d: int
    theta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        want = n_parameters(self.n, self.d)
        if len(self.theta) != want:
            raise ValueError(f"expected 2n(d+1) = {want} parameters, got {len(self.theta)}")


def entangling_block(n: int) -> list[Gate]:
    even = [Gate("cz", (q, q + 1)) for q in range(0, n - 1, 2)]
    odd = [Gate("cz", (q, q + 1)) for q in range(1, n - 1, 2)]
    nnn = [Gate("cz", (q, q + 2)) for q in range(n - 2)]
    return even + odd + nnn


def _rotation_layer(n: int, theta, layer: int) -> list[Gate]:
    gates = []
    for q in range(n):
        k = 2 * (layer * n + q)
        gates += [Gate("ry", (q,), (theta[k],)), Gate("rz", (q,), (theta[k + 1],))]
    return gates


def vqe_ansatz_circuit(spec: AnsatzSpec) -> Circuit:
    n, d = spec.n, spec.d
    gates = preparation_layer(n)
    for layer in range(d):
        gates += _rotation_layer(n, spec.theta, layer)
        gates += entangling_block(n)
    gates += _rotation_layer(n, spec.theta, d)
    return Circuit(n, tuple(gates), f"vqe-n{n}-d{d}")


@dataclass
class LockedState:
    """Frozen VQE parameters shared by every estimator cell of one ``n``."""

    n: int
    d: int
    seed: int
    theta: list[float]
    achieved_energy: float
    reference_energy: float
    iterations: int
    converged: bool
    optimizer_trace: list[float] = field(default_factory=list)

    @property
    def ansatz(self) -> AnsatzSpec:
        return AnsatzSpec(self.n, self.d, tuple(self.theta))

    def circuit(self) -> Circuit:
        return vqe_ansatz_circuit(self.ansatz)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "LockedState":
        return cls(**json.loads(text))


_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)


class _AnsatzEnergy:
    """Exact ansatz energy with adjoint-mode and parameter-shift gradients."""

    def __init__(self, h: HamiltonianSpec, d: int):
        self.h, self.n, self.d = h, h.n, d
        self.ops = h.window_ops()
        self.ref = basis_state("1" * self.n)

    def _gates(self, theta):
        # the X preparation layer is folded into the reference state
        return vqe_ansatz_circuit(AnsatzSpec(self.n, self.d, theta)).gates[self.n:]

    def state(self, theta) -> np.ndarray:
        psi = self.ref
        for g in self._gates(theta):
            psi = apply_gate(psi, g, self.n)
        return psi

    def _apply_h(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for m, qs in self.ops:
            out += apply_matrix(psi, m, qs, self.n)
        return out

    def __call__(self, theta) -> float:
        return expectation(self.state(theta), self.ops)

    def gradient(self, theta) -> np.ndarray:
        """Adjoint differentiation: one backward sweep over the gate list."""
        gates = self._gates(theta)
        psi = self.state(theta)
        lam = self._apply_h(psi)
        grad = []
        for g in reversed(gates):
            if g.kind in ("ry", "rz"):
                gen = _Y if g.kind == "ry" else _Z
                grad.append(np.vdot(lam, apply_matrix(psi, gen, g.qubits, self.n)).imag)
            inv = g.adjoint()
            psi = apply_gate(psi, inv, self.n)
            lam = apply_gate(lam, inv, self.n)
        return np.array(grad[::-1])

    def parameter_shift_gradient(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        grad = np.empty_like(theta)
        for k in range(theta.size):
            e = np.zeros_like(theta)
            e[k] = np.pi / 2
            grad[k] = 0.5 * (self(theta + e) - self(theta - e))
        return grad


def vqe_optimize(
    n: int,
    d: int,
    h: HamiltonianSpec,
    seed: int,
    max_iters: int = 500,
    restarts: int = 3,
    tol: float = 1e-10,
) -> LockedState:
    """Minimise the exact ansatz energy and return the best parameters found.

    The first start is uniform in [-0.1, 0.1]; ``restarts`` further starts are
    uniform in [-pi, pi]. Each start runs L-BFGS with adjoint-mode
    gradients. Everything is seeded, so the result is a function of
    ``(n, d, h, seed, max_iters, restarts)``.
    """
    if n < 4 or h.n != n:
        raise ValueError("need n >= 4 and a matching Hamiltonian")
    energy = _AnsatzEnergy(h, d)
    rng = np.random.default_rng(seed)
    size = n_parameters(n, d)
    starts = [rng.uniform(-0.1, 0.1, size)] + [rng.uniform(-np.pi, np.pi, size) for _ in range(restarts)]
    best = None
    trace: list[float] = []
    iterations = 0
    converged = False
    for k, theta0 in enumerate(starts):
        history = [energy(theta0)]
        res = minimize(
            energy,
            theta0,
            jac=energy.gradient,
            method="L-BFGS-B",
            callback=lambda xk: history.append(energy(xk)),
            options={"maxiter": max_iters, "ftol": tol, "gtol": 1e-7},
        )
        log.info("vqe n=%d d=%d start %d: E=%.10f after %d iterations", n, d, k, res.fun, res.nit)
        trace.extend(history)
        iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best, converged = res, bool(res.success)
    if not converged:
        log.warning("vqe_optimize n=%d d=%d seed=%d: best start did not converge (%s)", n, d, seed, best.message)
    return LockedState(
        n=n,
        d=d,
        seed=int(seed),
        theta=[float(t) for t in best.x],
        achieved_energy=float(best.fun),
        reference_energy=float(h.energy(basis_state("1" * n))),
        iterations=iterations,
        converged=converged,
        optimizer_trace=[float(x) for x in trace],
    )
