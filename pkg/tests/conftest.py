import numpy as np
import pytest

from fusionreadout.fib import build_hamiltonian


@pytest.fixture(scope="session")
def h5():
    return build_hamiltonian(5)


@pytest.fixture(scope="session")
def h7():
    return build_hamiltonian(7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unitary(dim, rng):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def random_density(n, rng, rank=3):
    vs = rng.normal(size=(rank, 2**n)) + 1j * rng.normal(size=(rank, 2**n))
    p = rng.dirichlet(np.ones(rank))
    rho = sum(pk * np.outer(v, v.conj()) / np.vdot(v, v).real for pk, v in zip(p, vs))
    return rho


def equal_up_to_phase(a, b, tol=1e-8):
    k = np.argmax(abs(b))
    if abs(b.flat[k]) < tol:
        return np.allclose(a, b, atol=tol)
    phase = a.flat[k] / b.flat[k]
    return abs(abs(phase) - 1) < tol and np.allclose(a, phase * b, atol=tol)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
