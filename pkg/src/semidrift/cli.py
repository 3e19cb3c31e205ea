"""Command-line entry point: ``generate``, ``run``, ``bench`` and ``report``.

Exit codes: 0 success, 2 bad flags or configuration, 3 I/O failure,
4 dataset error, 5 run failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ConfigReadError, load_config, merge
from .evaluation import (GENERATORS, METHODS, ExperimentConfig, bench_grid, format_table,
                         make_source, prequential_run, read_summary, summarize, write_events,
                         write_results, write_summary)
from .generators import write_dataset
from .stream import StreamError

EXIT_USAGE, EXIT_IO, EXIT_DATASET, EXIT_RUN = 2, 3, 4, 5
OUTPUT_ENV = "SEMIDRIFT_OUTPUT_DIR"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise CliError(f"{what} must be comma-separated integers, got {text!r}", EXIT_USAGE) from None


def _budgets(text: str) -> list[float]:
    """``0.2,0.6,1.0`` or an inclusive range ``0.2:1.0:0.1``."""
    text = str(text)
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((hi - lo) / step))
            return [round(lo + k * step, 10) for k in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"bad budget list {text!r}", EXIT_USAGE) from None


def _names(text: str) -> list[str]:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _output_dir(args, file_cfg) -> Path:
    out = args.out or file_cfg.get("output", {}).get("dir") or os.environ.get(OUTPUT_ENV) \
        or "semidrift-out"
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {path}: {exc.strerror}", EXIT_IO) from None
    return path


def _echo_header(header: dict):
    print("# " + " ".join(f"{k}={v}" for k, v in header.items()))


# -- parser -----------------------------------------------------------------


def _add_stream_flags(p, gen_flag: bool):
    if gen_flag:
        p.add_argument("--gen", choices=GENERATORS, help="generator name")
    p.add_argument("--seed", type=int)
    p.add_argument("--length", type=int, help="number of instances to generate")
    p.add_argument("--drift-at", dest="drift_at", help="comma-separated drift indices")
    p.add_argument("--noise", type=float, help="label noise fraction")
    p.add_argument("--features", type=int, help="hyperplane dimensionality")


def _add_run_flags(p):
    p.add_argument("--kd", choices=("active", "pu"), help="knowledge-discovery method")
    p.add_argument("--window", type=int, help="window size n")
    p.add_argument("--tau", type=float, help="drift threshold")
    p.add_argument("--phi", type=float, help="warning threshold")
    p.add_argument("--delta", type=float, help="sensitivity offset added to the scaling factor")
    p.add_argument("--statistic", choices=("calibrated", "literal"))
    p.add_argument("--baseline-budget", dest="baseline_budget",
                   help="label fraction for baselines, or 'same' to use --label-budget")
    p.add_argument("--tolerance", type=int, help="delay tolerance for metrics")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semidrift",
                                 description="Semi-supervised drift detection experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./semidrift-out)")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    _add_stream_flags(g, gen_flag=True)
    g.add_argument("--output", help="CSV path (default <out>/<gen>-s<seed>.csv)")

    r = sub.add_parser("run", help="run one prequential experiment")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--data", help="dataset CSV")
    src.add_argument("--gen", choices=GENERATORS, help="generate the stream in memory")
    r.add_argument("--method", choices=METHODS)
    r.add_argument("--label-budget", dest="alpha", type=float, help="label fraction in (0, 1]")
    _add_stream_flags(r, gen_flag=False)
    _add_run_flags(r)

    b = sub.add_parser("bench", help="run a methods x budgets x datasets x seeds grid")
    b.add_argument("--methods", help="comma-separated, e.g. density,ph,adwin,eddm,ddm")
    b.add_argument("--budgets", help="comma list or lo:hi:step range")
    b.add_argument("--datasets", help="comma-separated generator names or CSV paths")
    b.add_argument("--seeds", help="comma-separated seeds")
    b.add_argument("--jobs", type=int, help="parallel worker processes")
    b.add_argument("--length", type=int)
    b.add_argument("--noise", type=float)
    _add_run_flags(b)

    rep = sub.add_parser("report", help="render a summary CSV as a table")
    rep.add_argument("summary", help="summary CSV written by run or bench")
    rep.add_argument("--events", help="events CSV to turn into per-run drift strips")
    rep.add_argument("--markdown", action="store_true")
    return ap


# -- commands -------------------------------------------------------------------


def _experiment(values: dict) -> ExperimentConfig:
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kw = {}
    for key, val in values.items():
        if key == "drift_at":
            kw["drift_points"] = tuple(_int_list(val, "--drift-at"))
        elif key == "features":
            kw["n_features"] = val
        elif key == "baseline_budget":
            kw[key] = None if str(val) == "same" else float(val)
        elif key in fields:
            kw[key] = val
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_USAGE) from None


def cmd_generate(args, file_cfg) -> int:
    vals = merge(file_cfg.get("generate", {}),
                 {k: getattr(args, k) for k in ("gen", "seed", "length", "drift_at", "noise",
                                                "features", "output")})
    if vals.get("length") is None:
        raise CliError("generate: --length is required", EXIT_USAGE)
    gen = vals.get("gen", "sea")
    if gen not in GENERATORS:
        raise CliError(f"unknown generator {gen!r}", EXIT_USAGE)
    seed = vals.get("seed", 1)
    cfg = _experiment({"dataset": gen, "seed": seed,
                       **{k: vals[k] for k in ("length", "drift_at", "noise", "features") if k in vals}})
    try:
        source = make_source(cfg)
    except ValueError as exc:
        raise CliError(f"invalid generator settings: {exc}", EXIT_USAGE) from None
    out = Path(vals["output"]) if vals.get("output") else \
        _output_dir(args, file_cfg) / f"{gen}-s{seed}.csv"
    try:
        write_dataset(source, out)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror}", EXIT_IO) from None
    print(f"{out}\t{len(source)} rows\tdrifts={','.join(map(str, cfg.true_drifts())) or '-'}")
    return 0


def _run_values(args, file_cfg, keys) -> dict:
    vals = merge(file_cfg.get("run", {}), {})
    vals = merge(vals, file_cfg.get("detector", {}))
    return merge(vals, {k: getattr(args, k, None) for k in keys})


RUN_KEYS = ("method", "alpha", "window", "seed", "length", "drift_at", "noise", "features",
            "kd", "tau", "phi", "delta", "statistic", "baseline_budget", "tolerance")


def cmd_run(args, file_cfg) -> int:
    vals = _run_values(args, file_cfg, RUN_KEYS)
    if args.data:
        vals["dataset"] = args.data
    elif args.gen:
        vals["dataset"] = args.gen
    cfg = _experiment(vals)
    out = _output_dir(args, file_cfg)
    header = {"command": "run", **cfg.as_dict()}
    _echo_header(header)
    try:
        result = prequential_run(cfg)
    except (StreamError, FileNotFoundError) as exc:
        raise CliError(f"dataset error: {exc}", EXIT_DATASET) from None
    except Exception as exc:
        raise CliError(f"run failed: {type(exc).__name__}: {exc}", EXIT_RUN) from None
    stem = result.run_id
    try:
        write_results([result], out / f"{stem}-results.csv", header)
        write_events([result], out / f"{stem}-events.csv", header)
        write_summary([summarize([result])], out / f"{stem}-summary.csv", header)
    except OSError as exc:
        raise CliError(f"cannot write results: {exc.strerror}", EXIT_IO) from None
    delays = ",".join("miss" if d is None else str(d) for d in result.delays) or "-"
    print(f"accuracy={result.accuracy:.4f} drifts={result.n_drifts} "
          f"false_alarms={result.false_alarms} delays={delays} queries={result.query_count}")
    print(f"wrote {out / stem}-{{results,events,summary}}.csv")
    return 0


def cmd_bench(args, file_cfg) -> int:
    bench = merge(file_cfg.get("bench", {}),
                  {k: getattr(args, k) for k in ("methods", "budgets", "datasets", "seeds", "jobs")})
    methods = _names(bench.get("methods", "density"))
    budgets = _budgets(bench.get("budgets", "1.0"))
    datasets = _names(bench.get("datasets", "sea"))
    seeds = _int_list(bench.get("seeds", "1"), "--seeds")
    if not (methods and budgets and datasets and seeds):
        raise CliError("bench: the grid is empty", EXIT_USAGE)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise CliError(f"unknown method(s): {', '.join(bad)}", EXIT_USAGE)
    vals = _run_values(args, file_cfg, ("window", "length", "noise", "kd", "tau", "phi", "delta",
                                        "statistic", "baseline_budget", "tolerance"))
    for m in methods:  # validate each cell's config before anything runs
        for a in budgets:
            _experiment({**vals, "method": m, "alpha": a})
    base = _experiment(vals)
    out = _output_dir(args, file_cfg)
    header = {"command": "bench", "methods": ",".join(methods),
              "budgets": ",".join(map(str, budgets)), "datasets": ",".join(datasets),
              "seeds": ",".join(map(str, seeds)), **base.as_dict()}
    _echo_header(header)
    rows, results = bench_grid(methods, budgets, datasets, seeds, base, jobs=bench.get("jobs", 1))
    for r in results:
        if r.error:
            print(f"cell failed: {r.run_id}: {r.error}", file=sys.stderr)
    try:
        write_summary(rows, out / "bench-summary.csv", header)
        write_results(results, out / "bench-results.csv", header)
        write_events(results, out / "bench-events.csv", header)
        table = format_table(rows)
        (out / "bench-table.txt").write_text(table, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write results: {exc.strerror}", EXIT_IO) from None
    print(table, end="")
    print(f"wrote {out}/bench-{{summary,results,events}}.csv and bench-table.txt")
    return 0 if any(not r.error for r in results) else EXIT_RUN


def cmd_report(args, file_cfg) -> int:
    try:
        rows = read_summary(args.summary)
    except OSError as exc:
        raise CliError(f"cannot read {args.summary}: {exc.strerror}", EXIT_IO) from None
    except (ValueError, KeyError) as exc:
        raise CliError(f"bad summary file: {exc}", EXIT_DATASET) from None
    print(format_table(rows, markdown=args.markdown), end="")
    if args.events:
        strips: dict[str, list[int]] = {}
        try:
            with open(args.events, encoding="utf-8") as fh:
                for line in fh:
                    if line.startswith("#") or line.startswith("run_id"):
                        continue
                    run_id, idx = line.strip().rsplit(",", 1)
                    strips.setdefault(run_id, []).append(int(idx))
        except OSError as exc:
            raise CliError(f"cannot read {args.events}: {exc.strerror}", EXIT_IO) from None
        except ValueError:
            raise CliError(f"bad events file {args.events}", EXIT_DATASET) from None
        print()
        for run_id, idx in strips.items():
            print(f"{run_id}\t{' '.join(map(str, sorted(idx)))}")
    return 0


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "bench": cmd_bench, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_cfg = load_config(args.config) if args.config else {}
        return COMMANDS[args.command](args, file_cfg)
    except ConfigError as exc:
        print(f"semidrift: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, ConfigReadError) else EXIT_USAGE
    except CliError as exc:
        print(f"semidrift: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
