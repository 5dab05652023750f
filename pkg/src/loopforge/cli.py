"""``loopforge`` command line.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure (branch cut, infeasible plan, degree violation).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import BranchCutError, DegreeViolation, InfeasiblePlanError, LoopForgeError
from .harness import (
    ConfigError,
    ExperimentConfig,
    load_source,
    run_convergence,
    run_split_order,
    verify,
)
from .loops import save
from .pipeline import FactoredLoop, approximate_loop, save_factored
from .vp import synth_lip_su_loop

EXIT_OK, EXIT_INVALID, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--input", help="loop, grid or factored-loop JSON file")
    p.add_argument("--out", dest="output", help="output path")
    p.add_argument("--n", type=_int_list, help="target degree(s), comma separated")
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--s", type=int, help="override the splitting half-order")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", type=int, help="grid length (power of two)")
    p.add_argument("--size", type=int, help="matrix size N for synthetic loops")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--max-degree", dest="max_degree", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loopforge", description="Polynomial approximation of SU(N)-valued loops.")
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("approximate", help="approximate one loop at degree n")
    _add_common(p)
    p.add_argument("--max-step", dest="max_step", type=float)

    p = sub.add_parser("convergence", help="sweep n and fit the error rate")
    _add_common(p)
    p.add_argument("--max-step", dest="max_step", type=float)

    p = sub.add_parser("split-order", help="local error of splitting schemes against lambda")
    _add_common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--orders", type=_int_list, help="half-orders s, comma separated (0 = first order)")

    p = sub.add_parser("verify", help="check a loop file for SU(N) / su(N) values")
    p.add_argument("path")
    p.add_argument("--class", dest="loop_class", choices=["unitary-group", "algebra"], default="unitary-group")

    p = sub.add_parser("synth", help="write a synthetic su(N)-valued loop")
    _add_common(p)
    p.add_argument("--factored", action="store_true", help="wrap as a factored loop exp(A)")
    return parser


def _config(args) -> ExperimentConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in (
            "input", "output", "n", "alpha", "epsilon", "s", "seed", "grid", "size",
            "amplitude", "max_degree", "max_step", "trials", "orders",
        )
    }
    overrides["mode"] = args.mode
    if args.config:
        return ExperimentConfig.load(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _cmd_approximate(cfg: ExperimentConfig) -> int:
    source = load_source(cfg)
    n = cfg.n[-1]
    P, rep = approximate_loop(source, n, cfg.alpha, cfg.epsilon, s=cfg.s, G=cfg.grid, max_step=cfg.max_step)
    if cfg.output:
        out = Path(cfg.output)
        save(P, out)
        out.with_name(out.stem + ".report.json").write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
    _emit(rep.to_dict())
    return EXIT_OK


def _cmd_convergence(cfg: ExperimentConfig) -> int:
    report = run_convergence(cfg)
    if not cfg.output:
        sys.stdout.write(report.csv_text())
    _emit({"slope": report.slope, "half_width": report.half_width})
    failed = [r["n"] for r in report.rows if r["sup_error"] == "failed"]
    return EXIT_NUMERIC if failed else EXIT_OK


def _cmd_split_order(cfg: ExperimentConfig) -> int:
    rows, slopes = run_split_order(cfg)
    summary = {
        str(s): {"min": min(v), "max": max(v), "expected": 2 * s + 1 if s else 2}
        for s, v in slopes.items()
    }
    _emit(summary)
    return EXIT_OK


def _cmd_synth(cfg: ExperimentConfig, factored: bool) -> int:
    if not cfg.output:
        raise ConfigError("synth needs --out")
    A = synth_lip_su_loop(cfg.smoothness(), cfg.size)
    if factored:
        save_factored(FactoredLoop.single(A), cfg.output)
    else:
        save(A, cfg.output)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.mode == "verify":
            res = verify(args.path, args.loop_class)
            _emit(res.to_dict())
            return EXIT_OK if res.ok else EXIT_INVALID
        cfg = _config(args)
        if args.mode == "approximate":
            return _cmd_approximate(cfg)
        if args.mode == "convergence":
            return _cmd_convergence(cfg)
        if args.mode == "split-order":
            return _cmd_split_order(cfg)
        return _cmd_synth(cfg, args.factored)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BranchCutError, InfeasiblePlanError, DegreeViolation) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LoopForgeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
