import numpy as np
import pytest

ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title} {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mirror(i, n):
    """Half-sample symmetric index, written independently of the package."""
    while i < 0 or i >= n:
        if i < 0:
            i = -i - 1
        if i >= n:
            i = 2 * n - 1 - i
    return i


def conv_matrix_1d(kernel, n):
    """Dense 1-D convolution matrix with symmetric boundaries (loops only)."""
    r = len(kernel) // 2
    mat = np.zeros((n, n))
    for i in range(n):
        for t in range(len(kernel)):
            mat[i, mirror(i - (t - r), n)] += kernel[t]
    return mat
