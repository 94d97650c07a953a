import numpy as np
import pytest

ACCEPTANCE_RESULTS = {}


def random_orthogonal(rng, d):
    Q, Rr = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(Rr))


def random_nonexpansive(rng, d, norm=None):
    """Random square matrix rescaled to spectral norm ``norm`` (default uniform in ]0.2, 1])."""
    A = rng.standard_normal((d, d))
    target = rng.uniform(0.2, 1.0) if norm is None else norm
    return A * (target / np.linalg.norm(A, 2))


def random_with_fix(rng, d, k):
    """Nonexpansive R whose fixed-point set is a random k-dimensional subspace.

    R = W blockdiag(I_k, C) W^T with ||C|| < 1, so Fix R is exactly the span
    of the first k columns of W.
    """
    W = random_orthogonal(rng, d)
    C = random_nonexpansive(rng, d - k, norm=rng.uniform(0.3, 0.95)) if d > k else np.zeros((0, 0))
    B = np.zeros((d, d))
    B[:k, :k] = np.eye(k)
    B[k:, k:] = C
    return W @ B @ W.T, W[:, :k]


def random_symmetric(rng, d, eigs=None):
    W = random_orthogonal(rng, d)
    if eigs is None:
        eigs = rng.uniform(-1.0, 1.0, d)
    return (W * eigs) @ W.T, np.asarray(eigs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, line = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key:>2}: {line}")
