import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from shiftqr import HessenbergMatrix, hessenberg_reduce


def random_hessenberg(rng, n, normal=False):
    if normal:
        q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        lam = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a = q @ np.diag(lam) @ q.conj().T
        return hessenberg_reduce(a)[0]
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HessenbergMatrix.from_array(a / np.sqrt(2 * n))


def match_error(x, y):
    """Largest distance under the best one-to-one matching of two multisets."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    cost = np.abs(x[:, None] - y[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


#: (criterion id, title, passed, detail) lines collected by the acceptance suite
ACCEPTANCE_RESULTS: list = []


def report_criterion(cid: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {cid:2d}: {title} -- {detail}"
    ACCEPTANCE_RESULTS.append((cid, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)
