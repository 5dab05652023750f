import numpy as np
import pytest

from loopforge.loops import TrigMatrixLoop
from loopforge.vp import random_su


def random_loop(rng, N, d, scale=1.0):
    c = rng.standard_normal((2 * d + 1, N, N)) + 1j * rng.standard_normal((2 * d + 1, N, N))
    return TrigMatrixLoop(scale * c)


def random_su_loop(rng, N, d, scale=1.0):
    """su(N)-valued loop with random coefficients (C_{-k} = -C_k^H)."""
    c = np.zeros((2 * d + 1, N, N), dtype=complex)
    c[d] = random_su(rng, N, norm=scale)
    for k in range(1, d + 1):
        Z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        Z -= np.trace(Z) / N * np.eye(N)
        Z *= scale / np.linalg.norm(Z, 2)
        c[d + k] = Z
        c[d - k] = -Z.conj().T
    return TrigMatrixLoop(c)


def taylor_expm(X, terms=30):
    """Scaling-and-squaring Taylor series; independent of any eigendecomposition."""
    X = np.asarray(X, dtype=complex)
    nrm = np.linalg.norm(X, 2)
    sq = max(0, int(np.ceil(np.log2(max(nrm, 1e-300)))) + 1)
    Y = X / 2**sq
    out = np.eye(X.shape[0], dtype=complex)
    term = np.eye(X.shape[0], dtype=complex)
    for j in range(1, terms):
        term = term @ Y / j
        out = out + term
    for _ in range(sq):
        out = out @ out
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
