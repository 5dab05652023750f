"""Fourier partial sums, de la Vallee Poussin means, synthetic smooth loops."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasingError
from .loops import GridLoop, TrigMatrixLoop, analyze


@dataclass(frozen=True)
class SmoothnessSpec:
    alpha: float
    amplitude: float = 1.0
    seed: int = 0
    max_degree: int = 512

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.max_degree < 1:
            raise ValueError(f"max_degree must be >= 1, got {self.max_degree}")

    @classmethod
    def from_dict(cls, obj: dict) -> SmoothnessSpec:
        return cls(
            alpha=float(obj["alpha"]),
            amplitude=float(obj.get("amplitude", 1.0)),
            seed=int(obj.get("seed", 0)),
            max_degree=int(obj.get("max_degree", 512)),
        )

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "amplitude": self.amplitude,
            "seed": self.seed,
            "max_degree": self.max_degree,
        }


def _as_loop(g, degree: int) -> TrigMatrixLoop:
    if isinstance(g, GridLoop):
        if g.G < 2 * degree + 1:
            raise AliasingError(f"grid of {g.G} points cannot resolve degree {degree}")
        return analyze(g, min(degree, (g.G - 1) // 2))
    return g


def _weighted(loop: TrigMatrixLoop, weights: np.ndarray) -> TrigMatrixLoop:
    m = (len(weights) - 1) // 2
    c = loop.padded(max(m, loop.degree))
    d = (c.shape[0] - 1) // 2
    c = c[d - m : d + m + 1] * weights[:, None, None]
    return TrigMatrixLoop(c)


def partial_sum(g, j: int) -> TrigMatrixLoop:
    """Fourier partial sum of degree ``j`` of a grid (or a loop)."""
    loop = _as_loop(g, j)
    return _weighted(loop, np.ones(2 * j + 1))


def vp_weights(m: int) -> np.ndarray:
    """Multipliers of the delayed mean over partial sums ``S_h..S_m``, ``h = ceil(m/2)``.

    Indexed by ``k = -m..m``: 1 for ``|k| <= h``, then linear down to
    ``1/(m-h+1)`` at ``|k| = m``.
    """
    h = -(-m // 2)
    k = np.abs(np.arange(-m, m + 1))
    return np.where(k <= h, 1.0, (m - k + 1) / (m - h + 1))


def vp_mean(g, m: int) -> TrigMatrixLoop:
    """de la Vallee Poussin mean ``(1/(m-h+1)) * sum_{j=h..m} S_j``.

    Output degree is at most ``m``; loops of degree ``<= ceil(m/2)`` are
    reproduced.  The multipliers are real and even in ``k``, so skew-Hermitian
    and traceless values are preserved exactly.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    loop = _as_loop(g, m)
    return _weighted(loop, vp_weights(m))


def _random_traceless(rng: np.random.Generator, N: int) -> np.ndarray:
    Z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return Z - np.trace(Z) / N * np.eye(N)


def random_su(rng: np.random.Generator, N: int, norm: float | None = 1.0) -> np.ndarray:
    """Random traceless skew-Hermitian matrix, scaled to spectral norm ``norm``."""
    Z = _random_traceless(rng, N)
    X = 0.5 * (Z - np.conj(Z.T))
    if norm is not None:
        X *= norm / np.linalg.norm(X, 2)
    return X


def synth_lip_su_loop(spec: SmoothnessSpec, N: int) -> TrigMatrixLoop:
    """Seeded su(N)-valued loop with ``||C_k|| = amplitude * (1+|k|)**-(alpha+1)``."""
    rng = np.random.default_rng(spec.seed)
    d = spec.max_degree
    c = np.zeros((2 * d + 1, N, N), dtype=complex)
    c[d] = random_su(rng, N, norm=spec.amplitude)
    for k in range(1, d + 1):
        Z = _random_traceless(rng, N)
        Z *= spec.amplitude * (1.0 + k) ** -(spec.alpha + 1) / np.linalg.norm(Z, 2)
        c[d + k] = Z
        c[d - k] = -np.conj(Z.T)
    return TrigMatrixLoop(c)
