"""Experiment configuration, convergence sweeps, rate fits and file checks."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import LoopForgeError
from .loops import (
    TRIM_TOL,
    GridLoop,
    LoopClassReport,
    TrigMatrixLoop,
    classify,
    degree_trim,
    loop_or_grid_from_dict,
    samples_on,
)
from .pipeline import FactoredLoop, approximate_loop, factored_from_dict
from .splitting import build_scheme, local_error
from .vp import SmoothnessSpec, random_su, synth_lip_su_loop

CONVERGENCE_COLUMNS = ["n", "sup_error", "degree", "s", "m", "M", "L", "unitarity_defect", "seconds"]
SPLIT_COLUMNS = ["lambda", "error", "scheme_order", "seed"]
FIT_FLOOR = 1e-12
VERIFY_TOL = 1e-8
MODES = ("approximate", "convergence", "split-order", "verify", "synth")


class ConfigError(LoopForgeError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "convergence"
    input: str | None = None
    output: str | None = None
    n: list[int] = field(default_factory=lambda: [128, 256, 512, 1024, 2048])
    alpha: float = 2.0
    epsilon: float = 1.0
    s: int | None = None
    seed: int = 0
    grid: int = 4096
    size: int = 2
    amplitude: float = 1.0
    max_degree: int = 1024
    max_step: float = 0.5
    loop_class: str = "unitary-group"
    # split-order sweeps
    trials: int = 20
    generators: int = 2
    orders: list[int] = field(default_factory=lambda: [0, 1, 2])
    lambdas: list[float] | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise ConfigError(f"n list must be strictly increasing, got {self.n}")
        if any(v < 0 for v in self.n):
            raise ConfigError("n values must be non-negative")
        if self.grid < 1 or self.grid & (self.grid - 1):
            raise ConfigError(f"grid length must be a power of two, got {self.grid}")
        if self.size < 2:
            raise ConfigError("size must be >= 2")

    @classmethod
    def from_dict(cls, obj: dict) -> ExperimentConfig:
        obj = dict(obj)
        synth = obj.pop("synth", None)
        if synth is not None:
            spec = SmoothnessSpec.from_dict(synth)
            obj.setdefault("alpha", spec.alpha)
            obj.setdefault("amplitude", spec.amplitude)
            obj.setdefault("seed", spec.seed)
            obj.setdefault("max_degree", spec.max_degree)
        if "n" in obj and not isinstance(obj["n"], list):
            obj["n"] = [obj["n"]]
        if "class" in obj:
            obj["loop_class"] = obj.pop("class")
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, **overrides) -> ExperimentConfig:
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = cls.from_dict(obj)
        return cfg.with_overrides(**overrides)

    def with_overrides(self, **overrides) -> ExperimentConfig:
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides)

    def smoothness(self) -> SmoothnessSpec:
        return SmoothnessSpec(self.alpha, self.amplitude, self.seed, self.max_degree)


def load_source(cfg: ExperimentConfig):
    """The loop to approximate: a file given by ``input`` or a synthetic ``exp(A)``."""
    if cfg.input is None:
        A = synth_lip_su_loop(cfg.smoothness(), cfg.size)
        return FactoredLoop.single(A)
    path = Path(cfg.input)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from exc
    if "factors" in obj:
        return factored_from_dict(obj, base=path.parent)
    x = loop_or_grid_from_dict(obj)
    if isinstance(x, TrigMatrixLoop):
        x = GridLoop(samples_on(x, cfg.grid))
    return x


# --------------------------------------------------------------------------
# rate fitting


def _clean(points):
    pts = [(float(n), float(e)) for n, e in points if e is not None and math.isfinite(e) and e > FIT_FLOOR]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points with error > {FIT_FLOOR}, got {len(pts)}")
    return np.log([p[0] for p in pts]), np.log([p[1] for p in pts])


def fit_rate(points) -> float:
    """Least-squares slope of log(error) against log(n)."""
    x, y = _clean(points)
    return float(np.polyfit(x, y, 1)[0])


def fit_rate_ci(points, level: float = 0.95) -> tuple[float, float]:
    """Slope and the half-width of its confidence interval."""
    x, y = _clean(points)
    res = stats.linregress(x, y)
    dof = len(x) - 2
    half = float(res.stderr * stats.t.ppf(0.5 + level / 2, dof)) if dof > 0 else float("nan")
    return float(res.slope), half


# --------------------------------------------------------------------------
# convergence sweep


@dataclass
class ConvergenceReport:
    rows: list[dict]
    slope: float | None
    half_width: float | None

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row.get(c)) for c in CONVERGENCE_COLUMNS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"slope": self.slope, "half_width": self.half_width, "rows": self.rows}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LOOPFORGE_THREADS", "1")))
    except ValueError:
        return 1


def _convergence_row(source, n: int, cfg: ExperimentConfig) -> dict:
    t0 = time.perf_counter()
    try:
        _, rep = approximate_loop(
            source, n, cfg.alpha, cfg.epsilon, s=cfg.s, G=cfg.grid, max_step=cfg.max_step
        )
    except LoopForgeError as exc:
        return {"n": n, "sup_error": "failed", "error": str(exc), "seconds": round(time.perf_counter() - t0, 3)}
    p = rep.plan
    return {
        "n": n,
        "sup_error": rep.sup_error,
        "degree": rep.degree,
        "s": p.s,
        "m": p.m,
        "M": p.M,
        "L": p.L,
        "unitarity_defect": rep.unitarity_defect,
        "seconds": round(time.perf_counter() - t0, 3),
    }


def run_convergence(cfg: ExperimentConfig, source=None) -> ConvergenceReport:
    """Approximate the configured loop for every ``n``; fit the error slope.

    Rows may be computed concurrently (``LOOPFORGE_THREADS``) but are always
    reported in ``n`` order.
    """
    if source is None:
        source = load_source(cfg)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(lambda n: _convergence_row(source, n, cfg), cfg.n))
    points = [(r["n"], r["sup_error"]) for r in rows if isinstance(r["sup_error"], float)]
    try:
        slope, half = fit_rate_ci(points)
    except ValueError:
        slope, half = None, None
    report = ConvergenceReport(rows, slope, half)
    if cfg.output:
        out = Path(cfg.output)
        out.write_text(report.csv_text())
        out.with_suffix(".json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return report


# --------------------------------------------------------------------------
# splitting order sweep


def default_lambdas(s: int) -> list[float]:
    if s >= 2:
        return list(np.logspace(-0.5, -2, 6))
    return list(np.logspace(-1, -3, 6))


def run_split_order(cfg: ExperimentConfig) -> tuple[list[dict], dict[int, list[float]]]:
    """Local-error sweeps on random su(N) generator sets; one slope per set and order."""
    rows, slopes = [], {}
    for s in cfg.orders:
        lambdas = cfg.lambdas or default_lambdas(s)
        scheme = build_scheme(s, cfg.generators)
        slopes[s] = []
        for trial in range(cfg.trials):
            seed = cfg.seed + trial
            rng = np.random.default_rng(seed)
            gens = np.array([random_su(rng, cfg.size) for _ in range(cfg.generators)])
            errs = [float(local_error(scheme, gens, lam)) for lam in lambdas]
            for lam, err in zip(lambdas, errs):
                rows.append({"lambda": float(lam), "error": err, "scheme_order": scheme.order, "seed": seed})
            slopes[s].append(fit_rate(list(zip(lambdas, errs))))
    if cfg.output:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SPLIT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in SPLIT_COLUMNS])
        Path(cfg.output).write_text(buf.getvalue())
    return rows, slopes


# --------------------------------------------------------------------------
# verification


@dataclass
class VerifyResult:
    report: LoopClassReport
    degree: int
    raw_degree: int
    ok: bool

    def to_dict(self) -> dict:
        return {
            "class": self.report.cls,
            "unitarity_defect": self.report.unitarity_defect,
            "det_defect": self.report.det_defect,
            "skewness_defect": self.report.skewness_defect,
            "trace_defect": self.report.trace_defect,
            "degree": self.degree,
            "raw_degree": self.raw_degree,
            "ok": self.ok,
        }


def verify(path, loop_class: str = "unitary-group", tol: float = VERIFY_TOL) -> VerifyResult:
    """Class defects and trimmed degree of a loop or grid file."""
    x = loop_or_grid_from_dict(json.loads(Path(path).read_text()))
    rep = classify(x, loop_class)
    if isinstance(x, TrigMatrixLoop):
        degree, raw = degree_trim(x, TRIM_TOL).degree, x.degree
    else:
        degree = raw = -1
    return VerifyResult(rep, degree, raw, rep.max_defect() <= tol)
