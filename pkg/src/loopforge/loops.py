"""Matrix-valued trigonometric-polynomial loops on the circle.

A loop of degree ``d`` is stored as its Fourier coefficients ``C_{-d}..C_d``
(``coeffs[k + d]`` multiplies ``exp(1j*k*t)``).  Sampled loops live on the
uniform grid ``t_g = 2*pi*g/G``.  Products of many factors are carried out
pointwise on a grid and brought back with :func:`analyze`, which is exact as
long as the grid resolves the product degree.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import AliasingError, BranchCutError, StructureError

TRIM_TOL = 1e-10
LOG_MARGIN = 0.1


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def default_grid(degree: int, factor: int = 8, minimum: int = 64) -> int:
    """Power-of-two grid with at least ``factor*(degree+1)`` points."""
    return max(minimum, next_pow2(factor * (degree + 1)))


def grid_points(G: int) -> np.ndarray:
    return 2 * np.pi * np.arange(G) / G


def spectral_norms(stack: np.ndarray) -> np.ndarray:
    """Spectral norm of each matrix in a ``(..., N, N)`` stack."""
    stack = np.asarray(stack)
    if stack.shape[-1] == 0:
        return np.zeros(stack.shape[:-2])
    return np.linalg.norm(stack, ord=2, axis=(-2, -1))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TrigMatrixLoop:
    """``t -> sum_k C_k exp(ikt)`` with complex ``N x N`` coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] % 2 != 1:
            raise ValueError(f"coefficient array must be (2d+1, N, N), got {c.shape}")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.degree:
            return np.zeros((self.size, self.size), dtype=complex)
        return self.coeffs[k + self.degree]

    @classmethod
    def constant(cls, M) -> TrigMatrixLoop:
        M = np.asarray(M, dtype=complex)
        return cls(M[None])

    @classmethod
    def identity(cls, N: int) -> TrigMatrixLoop:
        return cls.constant(np.eye(N))

    @classmethod
    def from_terms(cls, terms: dict[int, np.ndarray], N: int | None = None) -> TrigMatrixLoop:
        """Build a loop from a sparse ``{k: C_k}`` mapping."""
        if N is None:
            N = np.asarray(next(iter(terms.values()))).shape[0]
        d = max((abs(k) for k in terms), default=0)
        c = np.zeros((2 * d + 1, N, N), dtype=complex)
        for k, C in terms.items():
            c[k + d] += C
        return cls(c)

    def padded(self, d: int) -> np.ndarray:
        """Coefficient array zero-padded to degree ``d >= self.degree``."""
        if d < self.degree:
            raise ValueError("cannot pad to a smaller degree")
        out = np.zeros((2 * d + 1, self.size, self.size), dtype=complex)
        out[d - self.degree : d + self.degree + 1] = self.coeffs
        return out

    def __call__(self, t):
        return evaluate(self, t)

    def __add__(self, other: TrigMatrixLoop) -> TrigMatrixLoop:
        d = max(self.degree, other.degree)
        return TrigMatrixLoop(self.padded(d) + other.padded(d))

    def __sub__(self, other: TrigMatrixLoop) -> TrigMatrixLoop:
        d = max(self.degree, other.degree)
        return TrigMatrixLoop(self.padded(d) - other.padded(d))

    def __mul__(self, scalar) -> TrigMatrixLoop:
        return TrigMatrixLoop(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> TrigMatrixLoop:
        return TrigMatrixLoop(-self.coeffs)

    def adjoint(self) -> TrigMatrixLoop:
        """Pointwise conjugate transpose: ``C_k -> C_{-k}^H``."""
        return TrigMatrixLoop(np.conj(self.coeffs[::-1]).transpose(0, 2, 1))


@dataclass(frozen=True, eq=False)
class GridLoop:
    """A loop sampled at ``t_g = 2*pi*g/G``, ``G`` a power of two."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise ValueError(f"samples must be (G, N, N), got {s.shape}")
        G = s.shape[0]
        if G < 1 or G & (G - 1):
            raise ValueError(f"grid length must be a power of two, got {G}")
        object.__setattr__(self, "samples", _frozen(s))

    @property
    def size(self) -> int:
        return self.samples.shape[1]

    @property
    def G(self) -> int:
        return self.samples.shape[0]

    @property
    def t(self) -> np.ndarray:
        return grid_points(self.G)


@dataclass(frozen=True)
class LoopClassReport:
    cls: str
    unitarity_defect: float = 0.0
    det_defect: float = 0.0
    skewness_defect: float = 0.0
    trace_defect: float = 0.0

    def max_defect(self) -> float:
        return max(self.unitarity_defect, self.det_defect, self.skewness_defect, self.trace_defect)


# --------------------------------------------------------------------------
# evaluation and Fourier analysis


def evaluate(loop: TrigMatrixLoop, t):
    """Value of the loop at angle ``t`` (scalar or array)."""
    t = np.asarray(t, dtype=float)
    ks = np.arange(-loop.degree, loop.degree + 1)
    phases = np.exp(1j * np.multiply.outer(t, ks))
    return np.tensordot(phases, loop.coeffs, axes=([-1], [0]))


def synthesize(loop: TrigMatrixLoop, G: int) -> GridLoop:
    """Sample ``loop`` on the ``G``-point grid."""
    d = loop.degree
    if G < 2 * d + 1:
        raise AliasingError(f"grid of {G} points cannot hold degree {d}")
    spec = np.zeros((G, loop.size, loop.size), dtype=complex)
    spec[np.arange(-d, d + 1) % G] = loop.coeffs
    return GridLoop(G * np.fft.ifft(spec, axis=0))


def analyze(grid: GridLoop, degree: int) -> TrigMatrixLoop:
    """Degree-``degree`` loop built from the discrete Fourier coefficients."""
    G = grid.G
    if G < 2 * degree + 1:
        raise AliasingError(f"grid of {G} points cannot resolve degree {degree}")
    spec = np.fft.fft(grid.samples, axis=0) / G
    ks = np.arange(-degree, degree + 1) % G
    return TrigMatrixLoop(spec[ks])


def samples_on(x, G: int) -> np.ndarray:
    """Samples of a loop or grid on the ``G``-point grid."""
    if isinstance(x, GridLoop):
        if x.G != G:
            raise ValueError(f"grid has {x.G} points, expected {G}")
        return x.samples
    if isinstance(x, TrigMatrixLoop):
        if G >= 2 * x.degree + 1:
            return synthesize(x, G).samples
        if G & (G - 1) == 0:
            # oversample on a finer power-of-two grid and decimate
            fine = next_pow2(2 * x.degree + 1)
            return synthesize(x, fine).samples[:: fine // G]
        return evaluate(x, grid_points(G))
    raise TypeError(f"expected TrigMatrixLoop or GridLoop, got {type(x).__name__}")


def multiply(a: TrigMatrixLoop, b: TrigMatrixLoop) -> TrigMatrixLoop:
    """Pointwise matrix product; coefficients are the convolution of the inputs."""
    if a.size != b.size:
        raise ValueError(f"size mismatch: {a.size} vs {b.size}")
    d = a.degree + b.degree
    G = next_pow2(2 * d + 1)
    prod = synthesize(a, G).samples @ synthesize(b, G).samples
    return analyze(GridLoop(prod), d)


def degree_trim(loop: TrigMatrixLoop, rel_tol: float = TRIM_TOL) -> TrigMatrixLoop:
    """Drop outer coefficient blocks with norm <= ``rel_tol`` times the largest."""
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    norms = spectral_norms(loop.coeffs)
    top = norms.max()
    d = loop.degree
    if top == 0:
        return TrigMatrixLoop(np.zeros((1, loop.size, loop.size), dtype=complex))
    keep = norms > rel_tol * top
    ks = np.abs(np.arange(-d, d + 1))[keep]
    new_d = int(ks.max())
    return TrigMatrixLoop(loop.coeffs[d - new_d : d + new_d + 1])


def trimmed_degree(loop: TrigMatrixLoop, rel_tol: float = TRIM_TOL) -> int:
    return degree_trim(loop, rel_tol).degree


def _pick_grid(a, b, G: int | None) -> int:
    for x in (a, b):
        if isinstance(x, GridLoop):
            return x.G if G is None else G
    if G is None:
        deg = max(x.degree for x in (a, b) if isinstance(x, TrigMatrixLoop))
        G = default_grid(deg)
    return G


def sup_distance(a, b, G: int | None = None) -> float:
    """Grid maximum of the spectral norm of ``a(t) - b(t)``.

    ``a`` and ``b`` may be loops, grids, or constant matrices.  Without an
    explicit ``G`` the grid of a sampled argument is used, else a grid with
    at least ``8*(degree+1)`` points.
    """
    if not isinstance(a, (GridLoop, TrigMatrixLoop)):
        a = TrigMatrixLoop.constant(a)
    if not isinstance(b, (GridLoop, TrigMatrixLoop)):
        b = TrigMatrixLoop.constant(b)
    if a.size != b.size:
        raise ValueError(f"size mismatch: {a.size} vs {b.size}")
    G = _pick_grid(a, b, G)
    return float(spectral_norms(samples_on(a, G) - samples_on(b, G)).max())


# --------------------------------------------------------------------------
# exp / log on the skew-Hermitian <-> unitary pair


def _check_skew(X: np.ndarray, tol: float) -> None:
    defect = spectral_norms(X + np.conj(np.swapaxes(X, -1, -2)))
    scale = spectral_norms(X)
    if np.any(defect > tol * scale + 1e-300):
        worst = float(np.max(defect - tol * scale))
        raise StructureError(f"matrix is not skew-Hermitian (excess defect {worst:.3e})")


def matrix_exp_skew(X, tol: float = 1e-12) -> np.ndarray:
    """``exp(X)`` for skew-Hermitian ``X`` (or a stack) by unitary diagonalization."""
    X = np.asarray(X, dtype=complex)
    _check_skew(X, tol)
    H = -1j * X
    H = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def matrix_log_principal(U, margin: float = LOG_MARGIN, unitary_tol: float = 1e-8) -> np.ndarray:
    """Principal logarithm of a unitary matrix (or a stack of them).

    Raises :class:`BranchCutError` if an eigenvalue phase lies within
    ``margin`` of pi.
    """
    U = np.asarray(U, dtype=complex)
    N = U.shape[-1]
    flat = U.reshape(-1, N, N)
    defect = spectral_norms(np.conj(np.swapaxes(flat, -1, -2)) @ flat - np.eye(N))
    if np.any(defect > unitary_tol):
        raise StructureError(f"matrix is not unitary (defect {defect.max():.3e})")
    out = np.empty_like(flat)
    for idx, M in enumerate(flat):
        T, Q = scipy.linalg.schur(M, output="complex")
        phases = np.angle(np.diag(T))
        if np.any(np.abs(phases) > np.pi - margin):
            raise BranchCutError(
                f"eigenvalue phase {phases[np.argmax(np.abs(phases))]:.4f} too close to pi"
            )
        L = (Q * (1j * phases)[None, :]) @ np.conj(Q.T)
        out[idx] = 0.5 * (L - np.conj(L.T))
    return out.reshape(U.shape)


# --------------------------------------------------------------------------
# block embedding


def _check_pair(i: int, j: int, N: int) -> None:
    if not (1 <= i < j <= N):
        raise ValueError(f"need 1 <= i < j <= N, got i={i}, j={j}, N={N}")


def embed_matrix(a, i: int, j: int, N: int, fill: float = 1.0) -> np.ndarray:
    """Place the 2x2 ``a`` on rows/columns ``(i, j)`` (1-based) of ``fill*I_N``."""
    _check_pair(i, j, N)
    a = np.asarray(a, dtype=complex)
    out = np.zeros(a.shape[:-2] + (N, N), dtype=complex)
    idx = np.arange(N)
    out[..., idx, idx] = fill
    p, q = i - 1, j - 1
    out[..., p, p] = a[..., 0, 0]
    out[..., p, q] = a[..., 0, 1]
    out[..., q, p] = a[..., 1, 0]
    out[..., q, q] = a[..., 1, 1]
    return out


def embed_T(a: TrigMatrixLoop, i: int, j: int, N: int) -> TrigMatrixLoop:
    """Group embedding of a 2x2 loop into ``N x N`` at indices ``(i, j)``."""
    if a.size != 2:
        raise ValueError("embed_T expects a 2x2 loop")
    c = embed_matrix(a.coeffs, i, j, N, fill=0.0)
    d = a.degree
    c[d] += embed_matrix(np.zeros((2, 2)), i, j, N, fill=1.0)
    return TrigMatrixLoop(c)


def embed_algebra(a: TrigMatrixLoop, i: int, j: int, N: int) -> TrigMatrixLoop:
    """Algebra embedding: the 2x2 block at ``(i, j)``, zeros elsewhere."""
    if a.size != 2:
        raise ValueError("embed_algebra expects a 2x2 loop")
    return TrigMatrixLoop(embed_matrix(a.coeffs, i, j, N, fill=0.0))


# --------------------------------------------------------------------------
# structural checks


def classify(x, cls: str = "unitary-group", G: int | None = None) -> LoopClassReport:
    """Sample ``x`` and measure how far it is from SU(N) or su(N) values."""
    if isinstance(x, GridLoop):
        S = x.samples
    else:
        if G is None:
            G = default_grid(x.degree, factor=4)
        S = samples_on(x, G)
    N = S.shape[-1]
    SH = np.conj(np.swapaxes(S, -1, -2))
    if cls == "unitary-group":
        return LoopClassReport(
            cls=cls,
            unitarity_defect=float(spectral_norms(SH @ S - np.eye(N)).max()),
            det_defect=float(np.abs(np.linalg.det(S) - 1).max()),
        )
    if cls == "algebra":
        return LoopClassReport(
            cls=cls,
            skewness_defect=float(spectral_norms(S + SH).max()),
            trace_defect=float(np.abs(np.trace(S, axis1=-2, axis2=-1)).max()),
        )
    raise ValueError(f"unknown class {cls!r}")


def pointwise_exp(A, G: int | None = None) -> GridLoop:
    """Samples of ``exp(A(t))`` for an algebra-valued loop or grid."""
    if isinstance(A, GridLoop):
        S = A.samples
    else:
        S = samples_on(A, G if G is not None else default_grid(A.degree))
    return GridLoop(matrix_exp_skew(S, tol=1e-9))


# --------------------------------------------------------------------------
# JSON files


def matrix_to_dict(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def matrix_from_dict(d: dict) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def loop_to_dict(loop: TrigMatrixLoop) -> dict:
    d = loop.degree
    return {
        "n": loop.size,
        "degree": d,
        "coeffs": [{"k": k, **matrix_to_dict(loop.coeffs[k + d])} for k in range(-d, d + 1)],
    }


def loop_from_dict(obj: dict) -> TrigMatrixLoop:
    N, d = int(obj["n"]), int(obj["degree"])
    c = np.zeros((2 * d + 1, N, N), dtype=complex)
    for entry in obj["coeffs"]:
        k = int(entry["k"])
        if abs(k) > d:
            raise ValueError(f"coefficient k={k} exceeds declared degree {d}")
        c[k + d] = matrix_from_dict(entry).reshape(N, N)
    return TrigMatrixLoop(c)


def grid_to_dict(grid: GridLoop) -> dict:
    return {
        "n": grid.size,
        "grid": grid.G,
        "samples": [{"g": g, **matrix_to_dict(S)} for g, S in enumerate(grid.samples)],
    }


def grid_from_dict(obj: dict) -> GridLoop:
    N, G = int(obj["n"]), int(obj["grid"])
    s = np.zeros((G, N, N), dtype=complex)
    for entry in obj["samples"]:
        s[int(entry["g"])] = matrix_from_dict(entry).reshape(N, N)
    return GridLoop(s)


def loop_or_grid_from_dict(obj: dict):
    if "samples" in obj:
        return grid_from_dict(obj)
    if "coeffs" in obj:
        return loop_from_dict(obj)
    raise ValueError("object is neither a loop (coeffs) nor a grid (samples)")


def to_dict(x) -> dict:
    if isinstance(x, GridLoop):
        return grid_to_dict(x)
    return loop_to_dict(x)


def save(x, path) -> None:
    Path(path).write_text(json.dumps(to_dict(x)) + "\n")


def load(path):
    return loop_or_grid_from_dict(json.loads(Path(path).read_text()))
