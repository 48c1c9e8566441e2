import numpy as np
import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def dense_walk_matrix(p, q, coins, x_min, n):
    """
    U = S C on sites x_min .. x_min + n - 1 built from the block form of S,
    (S psi)(x) = (p psi_up(x) + q psi_down(x + 1), conj(q) psi_up(x - 1) - p psi_down(x)),
    with amplitudes outside the window dropped.  Index 2 (x - x_min) + spin.
    """
    dim = 2 * n
    c = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        c[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = coins[i]
    s = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        up, down = 2 * i, 2 * i + 1
        s[up, up] = p
        s[down, down] = -p
        if i + 1 < n:
            s[up, 2 * (i + 1) + 1] = q
        if i - 1 >= 0:
            s[down, 2 * (i - 1)] = np.conj(q)
    return s @ c


def random_unitary(rng, size=None):
    """Haar-ish random U(2) matrices via QR of complex Gaussians."""
    shape = () if size is None else (size,)
    z = rng.normal(size=shape + (2, 2)) + 1j * rng.normal(size=shape + (2, 2))
    qm, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return qm * (d / np.abs(d))[..., None, :]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
