"""Real basis of su(2)-valued polynomial loops and closed-form exponential factors.

Basis element ``B_{r,k}`` is built from an anticommuting axis pair
``(X_a, X_b)`` (``(X3, X1)``, ``(X1, X2)``, ``(X2, X3)`` for the families
``r = 1,2 / 3,4 / 5,6``)::

    odd r:   cos(kt) X_a - sin(kt) X_b
    even r:  sin(kt) X_a + cos(kt) X_b

Every element squares to ``-I`` pointwise, so ``exp(theta*B) = cos(theta) I +
sin(theta) B`` is a polynomial loop of degree ``k``.  Each element is a fixed
axis rotated about the third axis by angle ``kt``; an ascending product over
``k`` telescopes to half-angle rotations, which is where the ``6m`` degree
bound for lexicographic products comes from.

SU(2) factors are handled as the pair ``(alpha, beta)`` of
``[[alpha, beta], [-conj(beta), conj(alpha)]]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import axis_table, su2_chain
from .errors import StructureError
from .loops import (
    GridLoop,
    TrigMatrixLoop,
    analyze,
    classify,
    default_grid,
    grid_points,
    next_pow2,
)

X1 = np.array([[0, 1], [-1, 0]], dtype=complex)
X2 = np.array([[0, 1j], [1j, 0]], dtype=complex)
X3 = np.array([[1j, 0], [0, -1j]], dtype=complex)
AXES = (X1, X2, X3)

# (a, b) axis indices (0-based) for families r = 1..6
_FAMILY_AXES = {1: (2, 0), 2: (2, 0), 3: (0, 1), 4: (0, 1), 5: (1, 2), 6: (1, 2)}
FAMILIES = (1, 2, 3, 4, 5, 6)


def is_fake(r: int, k: int) -> bool:
    return k == 0 and r % 2 == 0


def axis_components(Y: np.ndarray) -> np.ndarray:
    """Real coordinates of su(2) elements along ``X1, X2, X3`` (last axis)."""
    Y = np.asarray(Y)
    return np.stack([-0.5 * np.einsum("ij,...ji->...", X, Y).real for X in AXES], axis=-1)


def _axis_vector(r: int, k: int, t: np.ndarray) -> np.ndarray:
    """Axis coordinates of ``B_{r,k}(t)``, shape ``t.shape + (3,)``."""
    a, b = _FAMILY_AXES[r]
    c, s = np.cos(k * t), np.sin(k * t)
    u = np.zeros(np.shape(t) + (3,))
    if r % 2:
        u[..., a], u[..., b] = c, -s
    else:
        u[..., a], u[..., b] = s, c
    return u


@dataclass(frozen=True, eq=False)
class BasisElement:
    r: int
    k: int
    loop: TrigMatrixLoop


@lru_cache(maxsize=None)
def _element_loop(r: int, k: int) -> TrigMatrixLoop:
    a, b = _FAMILY_AXES[r]
    Xa, Xb = AXES[a], AXES[b]
    if k == 0:
        return TrigMatrixLoop.constant(Xa if r % 2 else Xb)
    # cos(kt) = (e^{ikt} + e^{-ikt})/2, sin(kt) = (e^{ikt} - e^{-ikt})/(2i)
    if r % 2:
        Cp = 0.5 * Xa - Xb / 2j
        Cm = 0.5 * Xa + Xb / 2j
    else:
        Cp = Xa / 2j + 0.5 * Xb
        Cm = -Xa / 2j + 0.5 * Xb
    return TrigMatrixLoop.from_terms({k: Cp, -k: Cm}, N=2)


def basis_element(r: int, k: int) -> BasisElement:
    if r not in _FAMILY_AXES or k < 0:
        raise ValueError(f"no basis element r={r}, k={k}")
    if is_fake(r, k):
        raise ValueError(f"(r={r}, k=0) is a fake slot")
    return BasisElement(r, k, _element_loop(r, k))


def basis_slots(m: int) -> list[tuple[int, int]]:
    """Non-fake ``(r, k)`` in lexicographic order (r outer, k inner)."""
    return [(r, k) for r in FAMILIES for k in range(m + 1) if not is_fake(r, k)]


@dataclass(frozen=True, eq=False)
class BasisCoeffs:
    """Coefficients ``c[r-1, k]`` of an su(2) loop of degree ``<= m``."""

    m: int
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (6, self.m + 1):
            raise ValueError(f"expected shape (6, {self.m + 1}), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if self.m >= 0 and np.any(c[1::2, 0] != 0):
            raise ValueError("fake slots (even r, k=0) must be zero")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def __getitem__(self, rk: tuple[int, int]) -> float:
        r, k = rk
        return float(self.c[r - 1, k])

    @classmethod
    def zeros(cls, m: int) -> BasisCoeffs:
        return cls(m, np.zeros((6, m + 1)))

    def values(self) -> np.ndarray:
        """Coefficients in :func:`basis_slots` order."""
        return np.array([self.c[r - 1, k] for r, k in basis_slots(self.m)])

    def to_dict(self) -> dict:
        return {"m": self.m, "c": [{"r": r, "k": k, "v": self[r, k]} for r, k in basis_slots(self.m)]}

    @classmethod
    def from_dict(cls, obj: dict) -> BasisCoeffs:
        m = int(obj["m"])
        c = np.zeros((6, m + 1))
        for e in obj["c"]:
            r, k = int(e["r"]), int(e["k"])
            if is_fake(r, k):
                raise ValueError(f"fake slot (r={r}, k={k}) in coefficient file")
            c[r - 1, k] = float(e["v"])
        return cls(m, c)


def _family_matrix() -> np.ndarray:
    """Map from the 6 family coefficients at ``k >= 1`` to (cos, sin) axis parts."""
    M = np.zeros((6, 6))
    for r in FAMILIES:
        a, b = _FAMILY_AXES[r]
        col = r - 1
        if r % 2:
            M[a, col], M[3 + b, col] = 1.0, -1.0
        else:
            M[3 + a, col], M[b, col] = 1.0, 1.0
    return M


FAMILY_MATRIX = _family_matrix()


def expand_in_basis(R: TrigMatrixLoop, m: int | None = None, tol: float = 1e-10) -> BasisCoeffs:
    """Coefficients of an su(2)-valued loop of degree ``<= m`` in the basis."""
    if R.size != 2:
        raise ValueError("expand_in_basis expects a 2x2 loop")
    if m is None:
        m = R.degree
    if R.degree > m:
        raise ValueError(f"loop degree {R.degree} exceeds m={m}")
    rep = classify(R, "algebra")
    scale = max(1.0, float(np.abs(R.coeffs).max()))
    if max(rep.skewness_defect, rep.trace_defect) > tol * scale:
        raise StructureError(f"loop is not su(2)-valued ({rep})")
    c = np.zeros((6, m + 1))
    y0 = axis_components(R.coeff(0))
    c[0, 0], c[2, 0], c[4, 0] = y0[2], y0[0], y0[1]
    for k in range(1, R.degree + 1):
        Cp, Cm = R.coeff(k), R.coeff(-k)
        P = axis_components(Cp + Cm)
        Q = axis_components(1j * (Cp - Cm))
        c[:, k] = np.linalg.solve(FAMILY_MATRIX, np.concatenate([P, Q]))
    return BasisCoeffs(m, c)


def synthesize_from_basis(coeffs: BasisCoeffs) -> TrigMatrixLoop:
    """``sum_{r,k} c_{r,k} B_{r,k}``."""
    out = np.zeros((2 * coeffs.m + 1, 2, 2), dtype=complex)
    for r, k in basis_slots(coeffs.m):
        v = coeffs[r, k]
        if v:
            out += v * _element_loop(r, k).padded(coeffs.m)
    return TrigMatrixLoop(out)


def exp_factor(c: float, element: BasisElement, lam: float = 1.0) -> TrigMatrixLoop:
    """``exp(lam*c*B(t)) = cos(lam*c) I + sin(lam*c) B(t)``."""
    theta = lam * c
    B = element.loop
    out = np.sin(theta) * B.coeffs
    out[B.degree] += np.cos(theta) * np.eye(2)
    return TrigMatrixLoop(out)


# --------------------------------------------------------------------------
# generators for products of embedded SU(2) factors


@dataclass(frozen=True, eq=False)
class Generators:
    """Flat list of embedded basis generators ``c * T_pq(B_{r,k})``.

    ``pairs`` are 0-based ``(p, q)`` row/column indices.  ``c`` may carry
    leading batch dimensions; the last axis runs over generators.
    """

    N: int
    pairs: np.ndarray
    r: np.ndarray
    k: np.ndarray
    c: np.ndarray

    @property
    def J(self) -> int:
        return len(self.r)

    @property
    def max_k(self) -> int:
        return int(self.k.max()) if self.J else 0

    @classmethod
    def from_coeffs(cls, coeffs, N: int = 2) -> Generators:
        """From :class:`BasisCoeffs` (an SU(2) factor) or a ``{(i, j): BasisCoeffs}`` map."""
        if isinstance(coeffs, BasisCoeffs):
            coeffs = {(1, 2): coeffs}
        pairs, rs, ks, cs = [], [], [], []
        for (i, j) in sorted(coeffs):
            bc = coeffs[(i, j)]
            for r, k in basis_slots(bc.m):
                pairs.append((i - 1, j - 1))
                rs.append(r)
                ks.append(k)
                cs.append(bc[r, k])
        return cls(
            N,
            np.array(pairs, dtype=int).reshape(-1, 2),
            np.array(rs, dtype=int),
            np.array(ks, dtype=int),
            np.array(cs, dtype=float),
        )

    @classmethod
    def su2_batch(cls, m: int, c: np.ndarray) -> Generators:
        """Batched SU(2) generators; ``c`` has shape ``(..., 6m+3)``."""
        slots = basis_slots(m)
        return cls(
            2,
            np.zeros((len(slots), 2), dtype=int) + [0, 1],
            np.array([r for r, _ in slots]),
            np.array([k for _, k in slots]),
            np.asarray(c, dtype=float),
        )


def su2_factor_samples(r: int, k: int, theta, t: np.ndarray):
    """``(alpha, beta)`` of ``exp(theta*B_{r,k}(t))``, broadcast over ``theta[..., None]`` and ``t``."""
    u = _axis_vector(r, k, t)
    theta = np.asarray(theta, dtype=float)[..., None]
    cth, sth = np.cos(theta), np.sin(theta)
    alpha = cth + 1j * sth * u[..., 2]
    beta = sth * (u[..., 0] + 1j * u[..., 1])
    return alpha, beta


def _right_multiply(P: np.ndarray, p: int, q: int, alpha, beta) -> None:
    """In place ``P <- P @ T_pq([[alpha, beta], [-conj(beta), conj(alpha)]])``."""
    a = alpha[..., None]
    b = beta[..., None]
    Pp = P[..., :, p].copy()
    Pq = P[..., :, q]
    P[..., :, p] = Pp * a - Pq * np.conj(b)
    P[..., :, q] = Pp * b + Pq * np.conj(a)


def product_samples(gens: Generators, steps, lam: float, G: int) -> np.ndarray:
    """Samples of ``prod_steps exp(lam * w * c_j * T(B_j))`` on the ``G``-point grid.

    ``steps`` is a sequence of ``(generator index, weight)``.  Returns an
    array of shape ``batch + (G, N, N)``.
    """
    if gens.N == 2:
        return _su2_product_samples(gens, steps, lam, G)
    t = grid_points(G)
    batch = gens.c.shape[:-1]
    P = np.zeros(batch + (G, gens.N, gens.N), dtype=complex)
    P[..., :, np.arange(gens.N), np.arange(gens.N)] = 1.0
    for j, w in steps:
        cj = gens.c[..., j]
        if not np.any(cj):
            continue
        alpha, beta = su2_factor_samples(gens.r[j], gens.k[j], lam * w * cj, t)
        p, q = gens.pairs[j]
        _right_multiply(P, p, q, alpha, beta)
    return P


def _su2_product_samples(gens: Generators, steps, lam: float, G: int) -> np.ndarray:
    batch = gens.c.shape[:-1]
    c = gens.c.reshape(-1, gens.J)
    step_gen = np.array([j for j, _ in steps], dtype=np.int64)
    w = np.array([w for _, w in steps], dtype=float)
    theta = lam * w[None, :] * c[:, step_gen]
    t = grid_points(G)
    ks = np.arange(gens.max_k + 1)
    alpha = np.ones((c.shape[0], G), dtype=complex)
    beta = np.zeros((c.shape[0], G), dtype=complex)
    su2_chain(
        alpha,
        beta,
        np.cos(theta),
        np.sin(theta),
        step_gen,
        axis_table(gens.r, _FAMILY_AXES),
        np.cos(np.outer(ks, t)),
        np.sin(np.outer(ks, t)),
        gens.k.astype(np.int64),
    )
    out = np.empty((c.shape[0], G, 2, 2), dtype=complex)
    out[..., 0, 0] = alpha
    out[..., 0, 1] = beta
    out[..., 1, 0] = -np.conj(beta)
    out[..., 1, 1] = np.conj(alpha)
    return out.reshape(batch + (G, 2, 2))


def lexicographic_steps(J: int, order: str = "lexicographic"):
    if order == "lexicographic":
        return [(j, 1.0) for j in range(J)]
    if order == "reversed":
        return [(j, 1.0) for j in reversed(range(J))]
    raise ValueError(f"unknown order {order!r}")


def samples_to_loop(S: np.ndarray, degree: int | None = None) -> TrigMatrixLoop:
    G = S.shape[0]
    return analyze(GridLoop(S), (G - 1) // 2 if degree is None else degree)


def ordered_product(
    coeffs: BasisCoeffs, lam: float = 1.0, order: str = "lexicographic", G: int | None = None
) -> TrigMatrixLoop:
    """``prod_r prod_k exp(lam * c_{r,k} B_{r,k})`` as a polynomial loop.

    The product is formed on a grid of ``G`` points (default: at least
    ``4*(6m+1)``) and analyzed over the full band, so degree violations up to
    twice the ``6m`` bound remain visible before trimming.
    """
    gens = Generators.from_coeffs(coeffs)
    if G is None:
        G = default_grid(6 * coeffs.m, factor=4)
    S = product_samples(gens, lexicographic_steps(gens.J, order), lam, G)
    return samples_to_loop(S)


def decompose_pairs(R: TrigMatrixLoop, tol: float = 1e-10) -> dict[tuple[int, int], TrigMatrixLoop]:
    """Split an su(N)-valued loop into su(2) loops, one per index pair.

    ``R = sum_{i<j} embed_algebra(R_ij, i, j, N)``: off-diagonal entries go
    to their own pair, the traceless diagonal is carried by the adjacent
    pairs ``(p, p+1)`` through cumulative sums.  Pairs are 1-based.
    """
    N = R.size
    rep = classify(R, "algebra")
    scale = max(1.0, float(np.abs(R.coeffs).max()))
    if max(rep.skewness_defect, rep.trace_defect) > tol * scale:
        raise StructureError(f"loop is not su({N})-valued ({rep})")
    diag = np.diagonal(R.coeffs, axis1=1, axis2=2)
    cum = np.cumsum(diag, axis=1)
    out = {}
    for p in range(N):
        for q in range(p + 1, N):
            c = np.zeros((R.coeffs.shape[0], 2, 2), dtype=complex)
            c[:, 0, 1] = R.coeffs[:, p, q]
            c[:, 1, 0] = R.coeffs[:, q, p]
            if q == p + 1:
                c[:, 0, 0] = cum[:, p]
                c[:, 1, 1] = -cum[:, p]
            out[(p + 1, q + 1)] = TrigMatrixLoop(c)
    return out


def expand_su_n(R: TrigMatrixLoop, m: int | None = None) -> dict[tuple[int, int], BasisCoeffs]:
    """Basis coefficients of every pair block of an su(N)-valued loop."""
    if m is None:
        m = R.degree
    return {pair: expand_in_basis(block, m) for pair, block in decompose_pairs(R).items()}


def product_grid_for(bound: int, naive: int) -> int:
    """Grid on which a product of claimed degree ``bound`` and crude degree
    ``naive`` cannot alias a violation back inside the bound."""
    return next_pow2(bound + max(naive, bound) + 1)
