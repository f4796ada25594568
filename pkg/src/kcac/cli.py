"""``kcac`` command line: run, compare, similarity, gradcheck.

Exit codes: 0 success, 1 a check failed (gradcheck), 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigurationError, KcacError

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _cmd_run(args) -> int:
    from .experiment import ExperimentConfig, run_experiment

    cfg = ExperimentConfig.load(args.config)
    if args.quiet:
        result = run_experiment(cfg)
    else:
        print(f"running {cfg.name}: seeds {list(cfg.seeds)}", file=sys.stderr)
        result = run_experiment(cfg)
    print(result.output_dir)
    return EXIT_OK


def _cmd_compare(args) -> int:
    from .experiment import compare_runs

    report = compare_runs(args.baseline, args.candidate, args.threshold, args.smooth, args.final_window)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_text())
    return EXIT_OK


def _cmd_similarity(args) -> int:
    from .experiment import ExperimentConfig, emit_similarity

    text = emit_similarity(ExperimentConfig.load(args.config)).to_csv(args.precision)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    from .sac import grad_check

    worst = grad_check(args.epsilon, args.seed)
    ok = worst <= args.tolerance
    print(f"gradcheck {'passed' if ok else 'FAILED'} (worst {worst:.3e}, tolerance {args.tolerance:g})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kcac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train every seed of an experiment config")
    r.add_argument("config", type=Path)
    r.add_argument("-q", "--quiet", action="store_true")
    r.set_defaults(fn=_cmd_run)

    c = sub.add_parser("compare", help="episodes-to-threshold and final success of two finished runs")
    c.add_argument("baseline", type=Path)
    c.add_argument("candidate", type=Path)
    c.add_argument("--threshold", type=float, default=0.8)
    c.add_argument("--smooth", type=int, default=1, help="trailing moving-average window per seed (1 = raw)")
    c.add_argument("--final-window", type=int, default=10, help="episodes averaged for final success")
    c.add_argument("--json", action="store_true")
    c.set_defaults(fn=_cmd_compare)

    s = sub.add_parser("similarity", help="print the task similarity matrix as CSV")
    s.add_argument("config", type=Path)
    s.add_argument("--precision", type=int, default=None, help="decimal places (default: full repr)")
    s.add_argument("-o", "--output", type=Path)
    s.set_defaults(fn=_cmd_similarity)

    g = sub.add_parser("gradcheck", help="compare analytic SAC gradients with central differences")
    g.add_argument("--epsilon", type=float, default=1e-5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tolerance", type=float, default=1e-4)
    g.set_defaults(fn=_cmd_gradcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (KcacError, OSError, FloatingPointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
