"""Command line entry point: ``mcseg gen|solve|eval|bench``."""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import traceback

from . import io
from .engine import EngineError, SolveOptions, solve
from .generators import gen_synth_inclusion, gen_synth_potts, karate_edge_list, load_modularity
from .model import ModelError, eval_energy
from .rounding import RoundingError
from .report import ROW_CLASSES, render_figures, summarize, write_runs, write_summary
from .separation import ScheduleError, SeparationUsageError, parse_schedule

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


def _thresholds(text):
    if text is None:
        return None
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"bad threshold list {text!r}") from None
    if not vals:
        raise UsageError("threshold list is empty")
    return vals


def _options(args) -> SolveOptions:
    return SolveOptions(
        rounding=args.rounding,
        kappa=args.kappa,
        thresholds=_thresholds(args.thresholds),
        backend=args.backend,
        time_limit=args.time_limit,
        seed=args.seed,
        export_lp=getattr(args, "export_lp", None),
    )


def _load(path):
    try:
        return io.load_model(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_gen(args) -> int:
    if args.kind == "synth-potts":
        fg = gen_synth_potts(args.width, args.height, args.labels, args.seed)
    elif args.kind == "synth-inclusion":
        fg = gen_synth_inclusion(args.width, args.height, args.labels, args.lam, args.noise, args.seed)
    else:
        if args.edges:
            with open(args.edges, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = karate_edge_list()
        fg = load_modularity(text)
    text = io.dumps_model(fg)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    schedule = parse_schedule(args.schedule)
    fg = _load(args.model)
    result = solve(fg, schedule, _options(args))
    text = io.dumps_result(result)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    fg = _load(args.model)
    if os.path.exists(args.labeling):
        with open(args.labeling, encoding="utf-8") as fh:
            obj = json.load(fh)
        labels = obj.get("labeling") if isinstance(obj, dict) else obj
    else:
        try:
            labels = [int(t) for t in args.labeling.split(",")]
        except ValueError:
            raise UsageError(f"bad labeling {args.labeling!r}") from None
    if not isinstance(labels, list):
        raise UsageError("labeling must be a list of integers")
    print(repr(eval_energy(fg, labels)))
    return EXIT_OK


def cmd_bench(args) -> int:
    schedules = [s.strip() for s in args.schedules.split(",") if s.strip()]
    for s in schedules:
        parse_schedule(s)
    if not os.path.isdir(args.corpus):
        raise UsageError(f"corpus {args.corpus!r} is not a directory")
    files = sorted(glob.glob(os.path.join(args.corpus, "*.json")))
    opts = _options(args)
    rows = []
    for path in files:
        name = os.path.basename(path)
        try:
            fg = io.load_model(path)
        except (ModelError, OSError) as exc:
            for s in schedules:
                rows.append({"instance": name, "schedule": s, "error": f"load: {exc}"})
            continue
        for s in schedules:
            row = {"instance": name, "schedule": s}
            try:
                r = solve(fg, s, opts)
                row.update(runtime_ms=f"{r.runtime_ms:.3f}", value=repr(r.value), bound=repr(r.bound), status=r.status)
                counts: dict = {}
                for st in r.stage_stats:
                    for tag, c in st.rows_added.items():
                        counts[tag] = counts.get(tag, 0) + c
                for c in ROW_CLASSES:
                    row[f"rows_{c}"] = counts.get(c, 0)
            except Exception as exc:  # recorded per row; the run continues
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            if args.verbose:
                print(f"{name} {s} {row.get('status', row.get('error'))}", file=sys.stderr)
    write_runs(args.out, rows)
    summary = summarize(rows)
    write_summary(os.path.splitext(args.out)[0] + ".summary.csv", summary)
    if not args.no_figures:
        render_figures(args.out, rows, summary)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _solve_flags(p):
    p.add_argument("--rounding", choices=["nearest", "derand", "pseudo", "components"])
    p.add_argument("--kappa", type=float)
    p.add_argument("--thresholds", help="comma separated list for --rounding pseudo/derand")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, help="soft limit in seconds, checked between solves")
    p.add_argument("--backend", choices=["auto", "native", "highs"], default="auto")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mcseg", description="Multicut solver for Potts and higher-order segmentation models")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a generated model as JSON")
    g.add_argument("kind", choices=["synth-potts", "synth-inclusion", "modularity"])
    g.add_argument("--width", type=int, default=32)
    g.add_argument("--height", type=int, default=32)
    g.add_argument("--labels", type=int, default=10)
    g.add_argument("--lam", type=float, default=1.0)
    g.add_argument("--noise", type=float, default=0.2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--edges", help="edge list for modularity (default: bundled karate club)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve a model file")
    s.add_argument("model")
    s.add_argument("--schedule", required=True)
    s.add_argument("--out")
    s.add_argument("--export-lp", dest="export_lp")
    _solve_flags(s)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("eval", help="energy of a labeling")
    e.add_argument("model")
    e.add_argument("labeling", help="comma separated labels, or a JSON file")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="run schedules over a corpus directory of model files")
    b.add_argument("corpus")
    b.add_argument("--schedules", required=True, help="comma separated schedules")
    b.add_argument("--out", required=True, help="per-run CSV; summary and figures are written beside it")
    b.add_argument("--no-figures", action="store_true")
    b.add_argument("--verbose", action="store_true")
    _solve_flags(b)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ScheduleError, SeparationUsageError, ModelError, RoundingError) as exc:
        print(f"mcseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as exc:
        print(f"mcseg: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
