"""Command-line entry point: ``blochsep {sample,analyze,xstate-table,verify}``.

Data go to files and standard output (JSON); progress goes to standard error.
Exit status: 0 on success, 1 when verification fails, 2 on bad input or I/O
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from blochsep import measures
from blochsep.harness import report, runner, tables, verify

EXIT_FAILED = 1
EXIT_USAGE = 2


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_sample(args) -> int:
    config = runner.RunConfig(
        measure=measures.MeasureSpec.parse(args.measure),
        n_samples=args.n,
        base_seed=args.seed,
        n_workers=args.workers,
        checkpoint_every=args.checkpoint_every,
        out_path=Path(args.out),
    )
    hist = runner.run(config, resume=Path(args.resume) if args.resume else None,
                      progress=not args.quiet)
    _emit({"measure": hist.measure, "seed": hist.base_seed, "n_samples": hist.n_samples,
           "n_separable": hist.n_sep, "checkpoint": str(args.out)})
    return 0


def cmd_analyze(args) -> int:
    hist = runner.load_checkpoint(args.input)
    rep = report.write_bundle(hist, args.out, args.conjectures)
    _emit(rep)
    return 0


def cmd_xstate_table(args) -> int:
    summary = tables.write_tables(args.step, tables.parse_k_list(args.k_list), args.out)
    summary["out"] = str(args.out)
    _emit(summary)
    return 0


def cmd_verify(args) -> int:
    verdict = verify.verify(args.scale, args.seed, args.workers, progress=not args.quiet)
    _emit(verdict)
    return 0 if verdict["passed"] else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blochsep",
                                description="Two-qubit separability versus Bloch radii.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw states and write a checkpoint")
    s.add_argument("--measure", required=True,
                   help="hs | induced:K | bures | rebit | xstate-hs | xstate-induced:K")
    s.add_argument("--n", type=int, required=True, help="total number of samples")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--checkpoint-every", type=int, default=16 * runner.BLOCK,
                   help="samples between checkpoint writes (rounded up to whole blocks)")
    s.add_argument("--out", required=True, help="checkpoint path")
    s.add_argument("--resume", help="continue from this checkpoint")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("analyze", help="report and CSV bundle from a checkpoint")
    a.add_argument("--in", dest="input", required=True, help="checkpoint path")
    a.add_argument("--conjectures", choices=("default", "none"), default="default")
    a.add_argument("--out", required=True, help="output directory")
    a.set_defaults(func=cmd_analyze)

    x = sub.add_parser("xstate-table", help="analytic X-state surfaces and constants")
    x.add_argument("--step", type=float, default=0.01)
    x.add_argument("--k-list", default="3,4,5,6,7")
    x.add_argument("--out", required=True, help="output directory")
    x.set_defaults(func=cmd_xstate_table)

    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--scale", choices=("quick", "full"), default="quick")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (measures.UnsupportedMeasure, runner.ConfigError, tables.GridError,
            report.EmptyCheckpoint) as exc:
        print(f"blochsep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (runner.CheckpointError, OSError) as exc:
        print(f"blochsep: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
