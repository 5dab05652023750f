"""End-to-end approximation of SU(N) loops by SU(N) polynomial loops.

The input is a product ``U(t) = prod_l U0_l exp(A_l(t))`` of constant SU(N)
matrices and exponentials of algebra-valued loops, each ``A_l`` either a
2x2 loop embedded at an index pair ``(i, j)`` or a full ``N x N`` loop.  A
raw sampled loop is brought into that shape by :func:`homotopy_factorize`.

Each factor is smoothed by a de la Vallee Poussin mean of degree ``m``,
expanded in the su(2) basis (pair by pair for ``N > 2``), pushed through a
symmetric splitting scheme with step ``1/M`` and raised to the ``M``-th
power.  Every exponential factor is an exact SU(2) polynomial loop, so the
result is SU(N)-valued up to roundoff for any choice of parameters.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import BranchCutError, DegreeViolation, InfeasiblePlanError, LoopForgeError
from .loops import (
    LOG_MARGIN,
    TRIM_TOL,
    GridLoop,
    TrigMatrixLoop,
    analyze,
    classify,
    degree_trim,
    embed_matrix,
    loop_or_grid_from_dict,
    matrix_exp_skew,
    matrix_from_dict,
    matrix_log_principal,
    matrix_to_dict,
    next_pow2,
    samples_on,
    spectral_norms,
    to_dict,
)
from .splitting import build_scheme, scheme_degree_bound
from .su2 import Generators, expand_su_n, product_samples
from .vp import vp_mean

DEFAULT_MAX_STEP = 0.5
CHECK_GRID = 4096
# roundoff-level trim for loops that are handed on; TRIM_TOL is for reporting
EXACT_TRIM_TOL = 1e-15


@dataclass(frozen=True)
class ApproxPlan:
    N: int
    L: int
    alpha: float
    epsilon: float
    s: int
    m: int
    M: int
    n: int
    feasible: bool

    @property
    def factor_unit(self) -> int:
        """Degree of one scheme application per unit of ``L``, divided by ``m*M``."""
        return 12 * 3 ** (self.s - 1)

    def degree_bound(self) -> int:
        return self.factor_unit * self.L * self.M * self.m

    def to_dict(self) -> dict:
        return asdict(self)


def choose_s(alpha: float, epsilon: float) -> int:
    """Smallest ``s >= 1`` with ``alpha**2 / (alpha + 2s) <= epsilon``."""
    s = 1
    while alpha * alpha / (alpha + 2 * s) > epsilon:
        s += 1
    return s


def plan_parameters(
    n: int, alpha: float, epsilon: float, L: int = 1, N: int = 2, s: int | None = None
) -> ApproxPlan:
    """Pick ``s``, ``M`` and ``m`` so that ``12 L 3^(s-1) M m <= n``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if L < 1:
        raise ValueError("L must be >= 1")
    if s is None:
        s = choose_s(alpha, epsilon)
    elif s < 1:
        raise ValueError("s must be >= 1")
    unit = 12 * L * 3 ** (s - 1)
    M = max(1, math.floor(n ** (alpha / (alpha + 2 * s)) / unit)) if n > 0 else 1
    m = n // (unit * M)
    return ApproxPlan(N=N, L=L, alpha=alpha, epsilon=epsilon, s=s, m=m, M=M, n=n, feasible=m >= 1)


# --------------------------------------------------------------------------
# factored loops


@dataclass(frozen=True, eq=False)
class Factor:
    """``U0 @ exp(embed(A))``; ``embed`` is a 1-based pair or ``None`` for full size."""

    u0: np.ndarray
    A: object
    embed: tuple[int, int] | None = None


@dataclass(frozen=True, eq=False)
class FactoredLoop:
    N: int
    factors: tuple[Factor, ...]

    def __post_init__(self):
        for f in self.factors:
            if np.asarray(f.u0).shape != (self.N, self.N):
                raise ValueError("constant factor has the wrong size")
            if f.embed is None:
                if f.A.size != self.N:
                    raise ValueError(f"full factor must be {self.N}x{self.N}")
            else:
                i, j = f.embed
                if not (1 <= i < j <= self.N) or f.A.size != 2:
                    raise ValueError(f"inconsistent embedding {f.embed} for N={self.N}")

    @property
    def weights(self) -> list[int]:
        """Degree multiplier of each factor: number of index pairs it touches."""
        full = self.N * (self.N - 1) // 2
        return [1 if f.embed is not None else full for f in self.factors]

    @property
    def L(self) -> int:
        return sum(self.weights)

    def factor_exp_samples(self, idx: int, G: int) -> np.ndarray:
        """Samples of ``exp(A_l(t))`` at the factor's own size."""
        return matrix_exp_skew(samples_on(self.factors[idx].A, G), tol=1e-9)

    def reference_samples(self, G: int) -> np.ndarray:
        """Samples of ``U(t) = prod_l U0_l exp(embed(A_l(t)))``."""
        out = np.broadcast_to(np.eye(self.N, dtype=complex), (G, self.N, self.N)).copy()
        for idx, f in enumerate(self.factors):
            E = self.factor_exp_samples(idx, G)
            if f.embed is not None:
                E = embed_matrix(E, *f.embed, self.N)
            out = out @ np.asarray(f.u0) @ E
        return out

    @classmethod
    def single(cls, A, embed=None, N: int | None = None) -> FactoredLoop:
        N = A.size if N is None else N
        return cls(N, (Factor(np.eye(N, dtype=complex), A, embed),))


def factored_to_dict(f: FactoredLoop) -> dict:
    return {
        "n": f.N,
        "factors": [
            {
                "u0": matrix_to_dict(x.u0),
                "A": to_dict(x.A),
                "embed": list(x.embed) if x.embed is not None else "full",
            }
            for x in f.factors
        ],
    }


def factored_from_dict(obj: dict, base: Path | None = None) -> FactoredLoop:
    N = int(obj["n"])
    factors = []
    for entry in obj["factors"]:
        ref = entry["A"]
        if isinstance(ref, str):
            path = Path(ref) if base is None else Path(base) / ref
            ref = json.loads(path.read_text())
        A = loop_or_grid_from_dict(ref)
        emb = entry.get("embed", "full")
        emb = None if emb == "full" else (int(emb[0]), int(emb[1]))
        u0 = matrix_from_dict(entry["u0"]) if "u0" in entry else np.eye(N, dtype=complex)
        factors.append(Factor(u0.reshape(N, N), A, emb))
    return FactoredLoop(N, tuple(factors))


def load_factored(path) -> FactoredLoop:
    path = Path(path)
    return factored_from_dict(json.loads(path.read_text()), base=path.parent)


def save_factored(f: FactoredLoop, path) -> None:
    Path(path).write_text(json.dumps(factored_to_dict(f)) + "\n")


# --------------------------------------------------------------------------
# homotopy route


def step_angle(max_step: float) -> float:
    """Largest ``||X||`` with ``||I - exp(X)|| <= max_step`` for skew-Hermitian ``X``."""
    return 2.0 * math.asin(max_step / 2.0)


def homotopy_factorize(
    U, max_step: float = DEFAULT_MAX_STEP, G: int | None = None, margin: float = LOG_MARGIN
) -> FactoredLoop:
    """Factor ``U = exp(A_1) ... exp(A_K)`` along the geodesic homotopy ``exp(xi * Log U)``.

    ``K`` is the smallest count for which consecutive homotopy stages differ
    by at most ``max_step`` in the sup norm; all ``A_k`` equal ``Log(U)/K``.
    """
    if not 0 < max_step < math.sqrt(2):
        raise ValueError(f"max_step must lie in (0, sqrt 2), got {max_step}")
    if isinstance(U, TrigMatrixLoop):
        U = GridLoop(samples_on(U, G if G is not None else CHECK_GRID))
    Lam = matrix_log_principal(U.samples, margin=margin)
    tr = np.abs(np.trace(Lam, axis1=-2, axis2=-1)).max()
    if tr > 1e-8:
        raise BranchCutError(f"principal logarithm has trace {tr:.3e}; it leaves su(N)")
    sup = float(spectral_norms(Lam).max())
    K = max(1, math.ceil(sup / step_angle(max_step) - 1e-12))
    A = GridLoop(Lam / K)
    eye = np.eye(U.size, dtype=complex)
    return FactoredLoop(U.size, tuple(Factor(eye, A, None) for _ in range(K)))


def homotopy_stage_gaps(f: FactoredLoop) -> np.ndarray:
    """``||psi(xi_{k-1}) - psi(xi_k)||_C`` for each consecutive stage."""
    out = []
    for x in f.factors:
        S = x.A.samples
        out.append(spectral_norms(np.eye(f.N) - matrix_exp_skew(S, tol=1e-9)).max())
    return np.array(out)


# --------------------------------------------------------------------------
# approximation of one factor


def per_factor_bound(plan: ApproxPlan, pairs: int) -> int:
    return plan.M * scheme_degree_bound(plan.s, plan.m, pairs)


def approximate_factor(A, plan: ApproxPlan, *, M: int | None = None, trim: bool = True) -> TrigMatrixLoop:
    """``phi_2s({c B / M})**M`` built from ``vp_mean(A, m)``; SU-valued of A's size.

    ``M`` overrides ``plan.M`` (used by step-count studies).
    """
    if not plan.feasible:
        raise InfeasiblePlanError(f"plan infeasible for n={plan.n}: m={plan.m}")
    M = plan.M if M is None else M
    R = vp_mean(A, plan.m)
    R = TrigMatrixLoop(0.5 * (R.coeffs - R.adjoint().coeffs))
    pairs = expand_su_n(R, plan.m)
    gens = Generators.from_coeffs(pairs, A.size)
    scheme = build_scheme(plan.s, gens.J)
    bound = M * scheme_degree_bound(plan.s, plan.m, len(pairs))
    G = next_pow2(4 * bound + 1)
    phi = product_samples(gens, scheme.steps, 1.0 / M, G)
    full = analyze(GridLoop(np.linalg.matrix_power(phi, M)), (G - 1) // 2)
    if not trim:
        return full
    measured = degree_trim(full, TRIM_TOL).degree
    if measured > bound:
        raise DegreeViolation(f"factor degree {measured} exceeds bound {bound}")
    # keep every coefficient inside the bound: trimming real content at
    # TRIM_TOL would cost unitarity at the 1e-10 level
    d = full.degree
    return degree_trim(TrigMatrixLoop(full.coeffs[d - bound : d + bound + 1]), EXACT_TRIM_TOL)


# --------------------------------------------------------------------------
# assembly


def assemble(f: FactoredLoop, per_factor, check_grid: int | None = None) -> TrigMatrixLoop:
    """``prod_l U0_l embed(P_l)``.

    With ``check_grid`` the factor-by-factor law
    ``||U - P||_C <= (#factors) * max_l ||exp(A_l) - P_l||_C`` is verified
    on that grid and a violation raises :class:`LoopForgeError`.
    """
    per_factor = list(per_factor)
    if len(per_factor) != len(f.factors):
        raise ValueError("one approximation per factor required")
    for x, P in zip(f.factors, per_factor):
        want = 2 if x.embed is not None else f.N
        if P.size != want:
            raise ValueError(f"factor approximation has size {P.size}, expected {want}")
    D = sum(P.degree for P in per_factor)
    G = next_pow2(2 * D + 1)
    cache: dict[int, np.ndarray] = {}
    S = np.broadcast_to(np.eye(f.N, dtype=complex), (G, f.N, f.N)).copy()
    for x, P in zip(f.factors, per_factor):
        if id(P) not in cache:
            cache[id(P)] = samples_on(P, G)
        E = cache[id(P)]
        if x.embed is not None:
            E = embed_matrix(E, *x.embed, f.N)
        S = S @ np.asarray(x.u0) @ E
    out = degree_trim(analyze(GridLoop(S), D), EXACT_TRIM_TOL)
    if check_grid is not None:
        law = factor_error_law(f, per_factor, out, check_grid)
        if not law["holds"]:
            raise LoopForgeError(f"factor-by-factor law violated: {law}")
    return out


def factor_error_law(f: FactoredLoop, per_factor, P: TrigMatrixLoop, G: int) -> dict:
    """Measured ``||U - P||_C`` against ``(#factors) * max_l ||exp(A_l) - P_l||_C``."""
    per = [
        float(spectral_norms(f.factor_exp_samples(i, G) - samples_on(Pl, G)).max())
        for i, Pl in enumerate(per_factor)
    ]
    assembled = float(spectral_norms(f.reference_samples(G) - samples_on(P, G)).max())
    bound = len(per) * max(per) * (1 + 1e-9)
    return {"assembled": assembled, "per_factor": per, "bound": bound, "holds": assembled <= bound}


# --------------------------------------------------------------------------
# full run


@dataclass
class ApproxReport:
    n: int
    plan: ApproxPlan
    sup_error: float
    degree: int
    unitarity_defect: float
    det_defect: float
    factors: int = 0
    per_factor_errors: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "plan": self.plan.to_dict(),
            "sup_error": self.sup_error,
            "degree": self.degree,
            "unitarity_defect": self.unitarity_defect,
            "det_defect": self.det_defect,
        }


def approximate_loop(
    source,
    n: int,
    alpha: float,
    epsilon: float,
    *,
    s: int | None = None,
    G: int = CHECK_GRID,
    max_step: float = DEFAULT_MAX_STEP,
) -> tuple[TrigMatrixLoop, ApproxReport]:
    """Approximate a factored or sampled SU(N) loop by a polynomial loop of degree ``<= n``.

    Sampled input is factored along the homotopy first; the error is then
    measured against the given samples.  When the degree budget is too small
    for the construction the constant identity loop is returned.
    """
    if isinstance(source, GridLoop):
        f = homotopy_factorize(source, max_step)
        G = source.G
        reference = source.samples
    elif isinstance(source, FactoredLoop):
        f = source
        reference = f.reference_samples(G)
    else:
        raise TypeError("source must be a FactoredLoop or GridLoop")

    plan = plan_parameters(n, alpha, epsilon, L=f.L, N=f.N, s=s)
    per_errors: list[float] = []
    if plan.feasible:
        cache: dict[int, TrigMatrixLoop] = {}
        per_factor = []
        for x in f.factors:
            if id(x.A) not in cache:
                cache[id(x.A)] = approximate_factor(x.A, plan)
            per_factor.append(cache[id(x.A)])
        P = assemble(f, per_factor)
        per_errors = [
            float(spectral_norms(f.factor_exp_samples(i, G) - samples_on(Pl, G)).max())
            for i, Pl in enumerate(per_factor)
        ]
        if P.degree > n:
            raise DegreeViolation(f"assembled degree {P.degree} exceeds n={n}")
        degree = degree_trim(P, TRIM_TOL).degree
    else:
        P = TrigMatrixLoop.identity(f.N)
        degree = 0

    check_G = max(G, CHECK_GRID)
    rep = classify(P, "unitary-group", G=check_G)
    report = ApproxReport(
        n=n,
        plan=plan,
        sup_error=float(spectral_norms(reference - samples_on(P, G)).max()),
        degree=degree,
        unitarity_defect=rep.unitarity_defect,
        det_defect=rep.det_defect,
        factors=len(f.factors),
        per_factor_errors=per_errors,
    )
    return P, report
