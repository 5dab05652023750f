"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import time

import numpy as np
import pytest

from loopforge.errors import BranchCutError
from loopforge.harness import ExperimentConfig, run_convergence, run_split_order
from loopforge.loops import (
    GridLoop,
    TrigMatrixLoop,
    degree_trim,
    grid_points,
    matrix_exp_skew,
    spectral_norms,
    sup_distance,
    synthesize,
)
from loopforge.pipeline import (
    ApproxPlan,
    Factor,
    FactoredLoop,
    approximate_factor,
    approximate_loop,
    assemble,
    factor_error_law,
    homotopy_factorize,
    plan_parameters,
)
from loopforge.splitting import build_scheme, local_error, order_study, scheme_degree_bound, suzuki_bound
from loopforge.su2 import Generators, basis_slots, product_grid_for, product_samples
from loopforge.vp import SmoothnessSpec, random_su, synth_lip_su_loop, vp_mean


@pytest.fixture
def report(capsys):
    def emit(num, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {title} | {detail}")
        return ok

    return emit


def slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# --------------------------------------------------------------------------
# shared corpus for structure and degree guarantees


def _corpus():
    runs = []
    for N in (2, 3):
        for seed, alpha, n in [(0, 2.0, 256), (1, 1.5, 512), (2, 3.0, 1024), (3, 2.0, 2048),
                               (4, 2.5, 768), (5, 2.0, 8)]:
            A = synth_lip_su_loop(SmoothnessSpec(alpha, amplitude=1.0, seed=seed, max_degree=512), N)
            runs.append((f"synth N={N} seed={seed} n={n}", FactoredLoop.single(A), n, alpha))
    rng = np.random.default_rng(77)
    for seed in range(4):
        N = 2 + seed % 2
        A = synth_lip_su_loop(SmoothnessSpec(2.0, amplitude=1.5, seed=100 + seed, max_degree=64), N)
        U = GridLoop(matrix_exp_skew(synthesize(A, 1024).samples))
        runs.append((f"grid N={N} seed={100 + seed}", U, 1024, 2.0))
    for seed in range(4):
        f = FactoredLoop(3, tuple(
            Factor(matrix_exp_skew(random_su(rng, 3, norm=2.0)),
                   synth_lip_su_loop(SmoothnessSpec(2.0, seed=10 * seed + i, max_degree=128), 2), e)
            for i, e in enumerate([(1, 2), (1, 3), (2, 3)])
        ))
        runs.append((f"embedded N=3 L=3 seed={seed}", f, 1536, 2.0))
    return runs


@pytest.fixture(scope="module")
def corpus_results():
    out = []
    for name, src, n, alpha in _corpus():
        t0 = time.perf_counter()
        P, rep = approximate_loop(src, n, alpha, 1.0)
        out.append((name, P, rep, time.perf_counter() - t0))
    return out


def test_criterion_01_structure_preservation(corpus_results, report):
    worst_u = max(r.unitarity_defect for _, _, r, _ in corpus_results)
    worst_d = max(r.det_defect for _, _, r, _ in corpus_results)
    slowest = max(dt for *_, dt in corpus_results)
    sizes = {P.size for _, P, _, _ in corpus_results}
    ok = len(corpus_results) >= 20 and sizes == {2, 3} and worst_u <= 1e-9 and worst_d <= 1e-9 and slowest < 60
    report(1, "structure preservation", ok,
           f"{len(corpus_results)} runs, max unitarity defect {worst_u:.2e}, max |det-1| {worst_d:.2e}, "
           f"slowest run {slowest:.1f}s")
    assert ok


def test_criterion_02_degree_guarantee(corpus_results, report):
    feasible = [(name, P, r) for name, P, r, _ in corpus_results if r.plan.feasible]
    violations = [(name, degree_trim(P).degree, r.n) for name, P, r in feasible if degree_trim(P).degree > r.n]
    fallbacks = [r for _, _, r, _ in corpus_results if not r.plan.feasible]
    ok = not violations and all(r.degree == 0 and r.sup_error <= 2 for r in fallbacks)
    report(2, "degree guarantee", ok,
           f"{len(feasible)} feasible runs, {len(violations)} violations, {len(fallbacks)} fallback runs")
    assert ok


# --------------------------------------------------------------------------


def _degrees_by_fft(S, bound):
    """Trimmed degree (relative 1e-10, spectral norm) of each sampled loop in ``S``."""
    G = S.shape[-3]
    C = np.fft.fft(S, axis=-3) / G
    norms = spectral_norms(C)
    k = np.abs(np.fft.fftfreq(G, 1.0 / G)).astype(int)
    keep = norms > 1e-10 * norms.max(axis=-1, keepdims=True)
    return np.where(keep, k, 0).max(axis=-1)


def test_criterion_03_basis_degree_law(report):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = {0: 0.0, 1: 0.0, 2: 0.0}
    violations = 0
    for m in (2, 4, 8, 16):
        J = 6 * m + 3
        for lam in (0.1, 1.0, 10.0):
            c = rng.standard_normal((200, J))
            gens = Generators.su2_batch(m, c)
            for s in (0, 1, 2):
                scheme = build_scheme(s, J)
                bound = scheme_degree_bound(s, m)
                naive = int(sum(abs(gens.k[j]) for j, _ in scheme.steps))
                G = product_grid_for(bound, naive)
                deg = _degrees_by_fft(product_samples(gens, scheme.steps, lam, G), bound)
                violations += int((deg > bound).sum())
                worst[s] = max(worst[s], float(deg.max()) / bound)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 120
    report(3, "basis degree law", ok,
           f"7200 products, {violations} violations, max degree/bound "
           f"ordered {worst[0]:.3f} phi2 {worst[1]:.3f} phi4 {worst[2]:.3f}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_splitting_order(report):
    t0 = time.perf_counter()
    lams = {0: np.logspace(-1, -3, 9), 1: np.logspace(-1, -3, 9), 2: np.logspace(-0.5, -2, 9)}
    expected = {0: 2, 1: 3, 2: 5}
    slopes = {s: [] for s in expected}
    for trial in range(20):
        rng = np.random.default_rng(400 + trial)
        gens = np.stack([random_su(rng, 2) for _ in range(3)])
        for s in expected:
            slopes[s].append(order_study(gens, s, lams[s]))
    elapsed = time.perf_counter() - t0
    dev = {s: max(abs(v - expected[s]) for v in slopes[s]) for s in expected}
    ok = all(d <= 0.3 for d in dev.values()) and elapsed < 60
    report(4, "splitting order", ok,
           ", ".join(f"s={s}: slopes {min(v):.3f}..{max(v):.3f} (expect {expected[s]})" for s, v in slopes.items())
           + f", {elapsed:.1f}s")
    assert ok


def test_criterion_05_suzuki_bound(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    violations, ratio = 0, 0.0
    for J in (2, 3, 4, 5):
        sets = np.stack([
            np.stack([random_su(rng, 2, norm=rng.uniform(0.1, 2.0)) for _ in range(J)])
            for _ in range(125)
        ])
        delta = suzuki_bound(sets)
        scheme = build_scheme(1, J)
        for lam in (0.05, 0.1, 0.2):
            err = local_error(scheme, sets, lam)
            violations += int((err > lam**3 * delta).sum())
            ratio = max(ratio, float((err / (lam**3 * delta)).max()))
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 60
    report(5, "Suzuki bound", ok,
           f"500 sets x 3 lambdas, {violations} violations, max error/bound {ratio:.3f}, {elapsed:.1f}s")
    assert ok


def test_criterion_06_vp_rate(report):
    t0 = time.perf_counter()
    ms = [8, 16, 32, 64, 128, 256]
    fitted = {}
    for alpha in (1.5, 2.0, 3.0):
        A = synth_lip_su_loop(SmoothnessSpec(alpha, seed=6, max_degree=1024), 2)
        errs = [sup_distance(A, vp_mean(A, m), 4096) for m in ms]
        fitted[alpha] = slope(ms, errs)
    elapsed = time.perf_counter() - t0
    ok = all(v <= -(a - 0.2) for a, v in fitted.items()) and elapsed < 60
    report(6, "VP rate", ok,
           ", ".join(f"alpha={a}: slope {v:.3f} (need <= {-(a - 0.2):.1f})" for a, v in fitted.items())
           + f", {elapsed:.1f}s")
    assert ok


def test_criterion_07_factor_m_rate(report):
    t0 = time.perf_counter()
    A = synth_lip_su_loop(SmoothnessSpec(2.0, seed=7, max_degree=512), 2)
    m = 16
    G = 4096
    exact = matrix_exp_skew(synthesize(vp_mean(A, m), G).samples)
    Ms = [2, 4, 8, 16, 32]
    fitted = {}
    for s in (1, 2):
        plan = ApproxPlan(N=2, L=1, alpha=2.0, epsilon=1.0, s=s, m=m, M=1, n=0, feasible=True)
        errs = [float(spectral_norms(exact - synthesize(approximate_factor(A, plan, M=M), G).samples).max())
                for M in Ms]
        fitted[s] = (slope(Ms, errs), errs)
    elapsed = time.perf_counter() - t0
    ok = all(v <= -2 * s + 0.3 for s, (v, _) in fitted.items()) and elapsed < 120
    report(7, "per-factor M-rate", ok,
           ", ".join(f"s={s}: slope {v:.3f} (need <= {-2 * s + 0.3:.1f}), errors {e[0]:.1e}..{e[-1]:.1e}"
                     for s, (v, e) in fitted.items()) + f", {elapsed:.1f}s")
    assert ok


def test_criterion_08_end_to_end_rate(report):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(n=[128, 256, 512, 1024, 2048], alpha=2.0, epsilon=1.0, seed=0,
                           amplitude=1.0, max_degree=1024, grid=4096, size=2)
    rep = run_convergence(cfg)
    elapsed = time.perf_counter() - t0
    errs = [r["sup_error"] for r in rep.rows]
    ok = rep.slope is not None and rep.slope <= -0.75 and elapsed < 300
    report(8, "end-to-end rate", ok,
           f"slope {rep.slope:.3f} +- {rep.half_width:.3f} (need <= -0.75, theory -1), "
           f"errors {', '.join(f'{e:.2e}' for e in errs)}, {elapsed:.1f}s")
    assert ok


def test_criterion_09_factor_by_factor_law(report):
    rng = np.random.default_rng(9)
    results = []
    for trial in range(8):
        f = FactoredLoop(3, tuple(
            Factor(matrix_exp_skew(random_su(rng, 3, norm=rng.uniform(0.5, 3.0))),
                   synth_lip_su_loop(SmoothnessSpec(rng.uniform(1.5, 3.0), amplitude=rng.uniform(0.3, 1.5),
                                                    seed=900 + 3 * trial + i, max_degree=256), 2), e)
            for i, e in enumerate([(1, 2), (1, 3), (2, 3)])
        ))
        for n in (128, 512, 2048):
            plan = plan_parameters(n, 2.0, 1.0, L=f.L, N=3)
            per = [approximate_factor(x.A, plan) for x in f.factors]
            law = factor_error_law(f, per, assemble(f, per), 512)
            results.append(law)
    violations = sum(not law["holds"] for law in results)
    ratio = max(law["assembled"] / law["bound"] for law in results)
    ok = violations == 0
    report(9, "factor-by-factor law", ok,
           f"{len(results)} N=3 L=3 runs, {violations} violations, max assembled/bound {ratio:.3f}")
    assert ok


def test_criterion_10_homotopy(report):
    rng = np.random.default_rng(10)
    worst, Ks = 0.0, []
    G = 512
    for trial in range(10):
        N = 2 + trial % 2
        A = synth_lip_su_loop(SmoothnessSpec(2.0, seed=1000 + trial, max_degree=32), N)
        S = synthesize(A, G).samples
        S = S * (rng.uniform(0.5, 2.0) / spectral_norms(S).max())
        U = GridLoop(matrix_exp_skew(S))
        f = homotopy_factorize(U)
        Ks.append(len(f.factors))
        worst = max(worst, float(spectral_norms(f.reference_samples(G) - U.samples).max()))
    t = grid_points(64)
    rot = np.zeros((64, 2, 2), dtype=complex)
    rot[:, 0, 0], rot[:, 1, 1] = np.exp(1j * t), np.exp(-1j * t)
    try:
        homotopy_factorize(GridLoop(rot))
        raised = False
    except BranchCutError:
        raised = True
    ok = worst <= 1e-9 and raised
    report(10, "homotopy factorization", ok,
           f"10 loops, K in {min(Ks)}..{max(Ks)}, max reconstruction error {worst:.2e}, "
           f"branch-cut input raised BranchCutError: {raised}")
    assert ok


def test_criterion_11_determinism(report, tmp_path, monkeypatch):
    def strip(text):
        return [line.rsplit(",", 1)[0] for line in text.splitlines()]

    base = dict(n=[64, 128, 256, 512], alpha=2.0, epsilon=1.0, seed=11, max_degree=256, grid=1024, size=3)
    out = []
    for i, threads in enumerate(("1", "1", "4")):
        monkeypatch.setenv("LOOPFORGE_THREADS", threads)
        path = tmp_path / f"conv{i}.csv"
        run_convergence(ExperimentConfig(output=str(path), **base))
        out.append(path.read_text())
    split = []
    for i in range(2):
        path = tmp_path / f"split{i}.csv"
        run_split_order(ExperimentConfig(mode="split-order", trials=5, seed=11, output=str(path)))
        split.append(path.read_bytes())
    ok = strip(out[0]) == strip(out[1]) == strip(out[2]) and split[0] == split[1]
    report(11, "determinism", ok,
           f"3 convergence runs identical modulo seconds: {strip(out[0]) == strip(out[1]) == strip(out[2])}, "
           f"split-order CSV byte-identical: {split[0] == split[1]}")
    assert ok
