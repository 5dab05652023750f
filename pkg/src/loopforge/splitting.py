"""Splitting schemes for ``exp(X_1 + ... + X_J)``: first order, Strang, and
Yoshida's triple-jump recursion, flattened to ``(generator, weight)`` steps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loops import TrigMatrixLoop, matrix_exp_skew, spectral_norms
from .su2 import BasisCoeffs, Generators, product_samples, samples_to_loop
from .loops import default_grid

LAMBDA_GUARD = 2.0


def yoshida_coeffs(s: int) -> tuple[float, float]:
    """Weights ``(a_s, b_s)`` lifting a symmetric order-2s method to order 2s+2."""
    if s < 1:
        raise ValueError("s must be >= 1")
    root = 2.0 ** (1.0 / (2 * s + 1))
    a = 1.0 / (2.0 - root)
    return a, -root * a


@dataclass(frozen=True)
class SplittingScheme:
    """Ordered steps ``(j, w)`` meaning ``exp(w * X_j)``; ``j`` is 0-based.

    ``s = 0`` is the first-order product, ``s >= 1`` the symmetric method of
    order ``2s``.
    """

    s: int
    J: int
    steps: tuple[tuple[int, float], ...]

    @property
    def order(self) -> int:
        return max(1, 2 * self.s)

    def scale_sums(self) -> np.ndarray:
        out = np.zeros(self.J)
        for j, w in self.steps:
            out[j] += w
        return out

    def max_weight(self) -> float:
        return max(abs(w) for _, w in self.steps)

    def is_palindromic(self) -> bool:
        return all(
            a[0] == b[0] and a[1] == b[1] for a, b in zip(self.steps, reversed(self.steps))
        )


def build_scheme(s: int, J: int) -> SplittingScheme:
    if s < 0 or J < 1:
        raise ValueError(f"need s >= 0 and J >= 1, got s={s}, J={J}")
    if s == 0:
        steps = [(j, 1.0) for j in range(J)]
    elif s == 1:
        half = [(j, 0.5) for j in range(J - 1)]
        steps = half + [(J - 1, 1.0)] + half[::-1]
    else:
        inner = build_scheme(s - 1, J).steps
        a, b = yoshida_coeffs(s - 1)
        steps = (
            [(j, a * w) for j, w in inner]
            + [(j, b * w) for j, w in inner]
            + [(j, a * w) for j, w in inner]
        )
    return SplittingScheme(s, J, tuple(steps))


def scheme_degree_bound(s: int, m: int, pairs: int = 1) -> int:
    """Degree bound for a scheme applied to basis generators of degree <= m."""
    if s == 0:
        return 6 * m * pairs
    return 3 ** (s - 1) * 12 * m * pairs


def apply_scheme_loops(
    scheme: SplittingScheme, coeffs, lam: float, G: int | None = None, N: int = 2
) -> TrigMatrixLoop:
    """Product over scheme steps of ``exp(lam * w * c_j B_j)`` as a polynomial loop.

    ``coeffs`` is a :class:`BasisCoeffs` (SU(2) output) or a pair map
    ``{(i, j): BasisCoeffs}`` (SU(N) output built from embedded factors).
    """
    gens = coeffs if isinstance(coeffs, Generators) else Generators.from_coeffs(coeffs, N)
    if gens.J != scheme.J:
        raise ValueError(f"scheme has J={scheme.J} generators, coefficients give {gens.J}")
    if G is None:
        npairs = len({tuple(p) for p in gens.pairs})
        G = default_grid(scheme_degree_bound(scheme.s, gens.max_k, npairs), factor=4)
    return samples_to_loop(product_samples(gens, scheme.steps, lam, G))


def apply_scheme_matrices(scheme: SplittingScheme, gens, lam: float) -> np.ndarray:
    """``prod_steps exp(lam * w * X_j)`` for constant skew-Hermitian ``X_j``.

    ``gens`` has shape ``(J, N, N)`` or ``(..., J, N, N)`` for batches.
    """
    gens = np.asarray(gens, dtype=complex)
    N = gens.shape[-1]
    P = np.broadcast_to(np.eye(N, dtype=complex), gens.shape[:-3] + (N, N)).copy()
    for j, w in scheme.steps:
        P = P @ matrix_exp_skew(lam * w * gens[..., j, :, :])
    return P


def local_error(scheme: SplittingScheme, gens, lam: float) -> np.ndarray:
    """``||exp(lam * sum X_j) - phi(lam X)||`` (spectral norm)."""
    gens = np.asarray(gens, dtype=complex)
    exact = matrix_exp_skew(lam * gens.sum(axis=-3))
    return spectral_norms(exact - apply_scheme_matrices(scheme, gens, lam))


def _check_lambda(scheme: SplittingScheme, gens: np.ndarray, lam: float) -> None:
    total = spectral_norms(gens).sum(axis=-1).max()
    if abs(lam) * scheme.max_weight() * total > LAMBDA_GUARD:
        raise ValueError(
            f"lambda={lam} outside the asymptotic range "
            f"(lambda*max|w|*sum||X|| = {abs(lam) * scheme.max_weight() * total:.3f} > {LAMBDA_GUARD})"
        )


def order_study(gens, s: int, lambdas, floor: float = 1e-13, return_errors: bool = False):
    """Least-squares slope of log(local error) against log(lambda).

    The expected slope is ``2s+1`` (2 for the first-order method, ``s = 0``).
    """
    gens = np.asarray(gens, dtype=complex)
    scheme = build_scheme(s, gens.shape[-3])
    lambdas = np.asarray(lambdas, dtype=float)
    for lam in lambdas:
        _check_lambda(scheme, gens, lam)
    errors = np.array([float(local_error(scheme, gens, lam)) for lam in lambdas])
    ok = errors > floor
    if ok.sum() < 2:
        raise ValueError("degenerate fit: errors at roundoff level")
    slope = float(np.polyfit(np.log(lambdas[ok]), np.log(errors[ok]), 1)[0])
    if return_errors:
        return slope, errors
    return slope


def _commutator(A, B):
    return A @ B - B @ A


def delta2(A, B) -> float:
    """``(1/12) (||[[A,B],B]|| + 1/2 ||[[A,B],A]||)``."""
    C = _commutator(A, B)
    return (spectral_norms(_commutator(C, B)) + 0.5 * spectral_norms(_commutator(C, A))) / 12.0


def suzuki_bound(gens) -> float:
    """Commutator bound ``Delta`` for the Strang product of constant generators.

    ``||exp(lam*sum X) - phi_2(lam X)|| <= lam**3 * Delta``.
    """
    gens = np.asarray(gens, dtype=complex)
    J = gens.shape[-3]
    total = 0.0
    tail = gens[..., J - 1, :, :].copy() if J else None
    for k in range(J - 2, -1, -1):
        total = total + delta2(gens[..., k, :, :], tail)
        tail = tail + gens[..., k, :, :]
    return total
