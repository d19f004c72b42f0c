"""Command line: ``forumsim simulate | analyze | sweep | fit``.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
data errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, stats
from .config import load_params_file, params_from_mapping, read_config_text
from .engine import run_simulation
from .errors import DataError, ParamError
from .ingest import load_log, write_log
from .records import RecordSet
from .report import DEFAULT_FIT_RANGES, build_tables, parse_range
from .sweep import METRICS, load_plan, run_sweep
from .tables import provenance_line, read_table, write_columns, write_kv, write_table

log = logging.getLogger("forumsim")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def run_id_for(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _versions() -> dict:
    return {"forumsim": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ParamError(f"output directory {out} is not writable: {exc}") from None
    return out


def _fit_ranges(items) -> dict:
    ranges = {}
    for item in items or []:
        if "=" not in item:
            raise ParamError(f"--fit-range expects name=lo:hi, got {item!r}")
        name, text = item.split("=", 1)
        if name not in DEFAULT_FIT_RANGES:
            raise ParamError(f"unknown fit range {name!r}; choose from {', '.join(DEFAULT_FIT_RANGES)}")
        try:
            ranges[name] = parse_range(text)
        except ValueError as exc:
            raise ParamError(str(exc)) from None
    return ranges


def _write_tables(out: Path, metrics, records, bin_ratio, ranges, run_id, seed) -> list[str]:
    ts = build_tables(metrics, bin_ratio, ranges, shuffle_seed=seed, records=records)
    written = []
    write_kv(out / "metrics.tsv", ts.summary, run_id, seed)
    write_kv(out / "fits.tsv", ts.fits, run_id, seed)
    written += ["metrics.tsv", "fits.tsv"]
    for stem, cols in ts.tables.items():
        write_columns(out / f"{stem}.tsv", cols, run_id, seed)
        written.append(f"{stem}.tsv")
    return written


def _write_empty(out: Path, run_id, seed) -> list[str]:
    write_kv(out / "metrics.tsv", [("total_posts", 0), ("n_users", 0), ("n_threads", 0)], run_id, seed)
    write_kv(out / "fits.tsv", [("status", "no_posts")], run_id, seed)
    return ["metrics.tsv", "fits.tsv"]


def _analysis_outputs(out, records: RecordSet, bin_ratio, ranges, run_id, seed) -> list[str]:
    if len(records) == 0:
        log.warning("no posts: writing empty metrics")
        return _write_empty(out, run_id, seed)
    return _write_tables(out, stats.compute_metrics(records), records, bin_ratio, ranges, run_id, seed)


def _write_manifest(out: Path, manifest: dict) -> None:
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=False, default=str)
        fh.write("\n")


def cmd_simulate(args) -> int:
    values = load_params_file(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise ParamError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v
    if args.seed is not None:
        values["seed"] = str(args.seed)
    if args.n_threads is not None:
        values["n_threads"] = str(args.n_threads)
    params = params_from_mapping(values)
    ranges = _fit_ranges(args.fit_range)
    out = _out_dir(args.out)
    run_id = run_id_for({"cmd": "simulate", "params": params.as_dict(), "version": __version__})
    t0 = time.perf_counter()
    sim = run_simulation(params, workers=args.workers)
    wall = time.perf_counter() - t0
    write_log(sim.records, out / "records.tsv", preamble=provenance_line(run_id, params.seed))
    files = ["records.tsv"]
    files += _analysis_outputs(out, sim.records, args.bin_ratio, ranges, run_id, params.seed)
    _write_manifest(out, {
        "run_id": run_id, "seed": params.seed, "command": "simulate",
        "params": params.as_dict(), "bin_ratio": args.bin_ratio,
        "fit_ranges": {**DEFAULT_FIT_RANGES, **ranges}, "workers": args.workers,
        "totals": {"n_threads": sim.n_threads, "total_posts": sim.total_posts,
                   "n_active_threads": sim.n_active_threads, "n_active_agents": sim.n_active_agents,
                   "quarrel_fraction": sim.quarrel_fraction, "quarrel_posts": sim.quarrel_posts,
                   "capped_quarrels": sim.capped_quarrels},
        "wall_time_s": wall, "versions": _versions(), "outputs": files,
    })
    print(f"{sim.total_posts} posts in {sim.n_active_threads} active threads by "
          f"{sim.n_active_agents} agents; quarrel fraction {sim.quarrel_fraction:.3f} -> {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    ranges = _fit_ranges(args.fit_range)
    out = _out_dir(args.out)
    digest = hashlib.sha256(Path(args.input).read_bytes()).hexdigest() if Path(args.input).is_file() else None
    records = load_log(args.input, args.delimiter, args.source_rows)
    run_id = run_id_for({"cmd": "analyze", "input_sha256": digest, "seed": args.seed,
                         "source_rows": args.source_rows, "version": __version__})
    files = _analysis_outputs(out, records, args.bin_ratio, ranges, run_id, args.seed)
    _write_manifest(out, {
        "run_id": run_id, "seed": args.seed, "command": "analyze",
        "input": str(args.input), "input_sha256": digest, "delimiter": args.delimiter,
        "source_rows": args.source_rows, "rows": len(records), "bin_ratio": args.bin_ratio,
        "fit_ranges": {**DEFAULT_FIT_RANGES, **ranges}, "versions": _versions(), "outputs": files,
    })
    print(f"{len(records)} posts analysed -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    plan = load_plan(args.plan)
    if args.replicates is not None:
        plan = type(plan)(plan.baseline, plan.axes, args.replicates, plan.mode)
    out = _out_dir(args.out)
    run_id = run_id_for({"cmd": "sweep", "plan": read_config_text(args.plan),
                         "replicates": plan.replicates, "version": __version__})
    seed = plan.baseline.seed

    def progress(done, total):
        log.info("sweep: %d/%d runs", done, total)

    t0 = time.perf_counter()
    report = run_sweep(plan, workers=args.workers, bin_ratio=args.bin_ratio, progress=progress)
    axes = [name for name, _ in plan.axes]
    columns = ["cell"] + axes + [f"{m}_{s}" for m in METRICS for s in ("mean", "sd")] + ["n_peaks"]
    rows = []
    (out / "curves").mkdir(exist_ok=True)
    for i, cell in enumerate(report.cells):
        rows.append([i] + [getattr(cell.params, a) if not isinstance(getattr(cell.params, a), tuple)
                           else "/".join(map(str, getattr(cell.params, a))) for a in axes]
                    + [v for m in METRICS for v in (cell.mean[m], cell.sd[m])] + [cell.n_peaks])
        write_columns(out / "curves" / f"cell_{i}.tsv", cell.curve, run_id, seed)
    write_table(out / "sweep.tsv", columns, rows, run_id, seed)
    _write_manifest(out, {
        "run_id": run_id, "seed": seed, "command": "sweep",
        "baseline": plan.baseline.as_dict(), "axes": plan.axes, "mode": plan.mode,
        "replicates": plan.replicates,
        "replicate_seeds": [plan.replicate_seed(r) for r in range(plan.replicates)],
        "cells": [c.changes for c in report.cells], "peak_definition": report.peak_definition,
        "bin_ratio": args.bin_ratio, "wall_time_s": time.perf_counter() - t0, "versions": _versions(),
    })
    print(f"{len(report.cells)} cells x {plan.replicates} replicates -> {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    header, data = read_table(args.table)
    if data.shape[0] == 0:
        raise DataError(f"{args.table}: table has no rows")
    x, y = data[:, 0], data[:, 1]
    fit_range = parse_range(args.range) if args.range else None
    if fit_range is not None:
        lo, hi = fit_range
        inside = np.ones(x.size, bool)
        if lo is not None:
            inside &= x >= lo
        if hi is not None:
            inside &= x <= hi
        if not inside.any():
            raise DataError(f"fit range {args.range} selects no rows of {args.table}")
    if args.model == "power_law":
        occupied = y > 0
        if "width" in header:
            counts = data[:, header.index("count")][occupied]
            widths = data[:, header.index("width")][occupied]
            first = _bin_starts(x[occupied], widths)
            hist = stats.HistogramSpec("log", None, np.r_[first, first[-1] + widths[-1]], x[occupied],
                                       counts.astype(np.int64), y[occupied], widths.astype(np.int64))
        else:
            n = occupied.sum()
            counts = data[:, header.index("count")][occupied] if "count" in header else np.ones(n)
            hist = stats.HistogramSpec("raw", None, np.r_[x[occupied], x[occupied][-1] + 1] if n else x,
                                       x[occupied], counts.astype(np.int64), y[occupied], np.ones(n, np.int64))
        fit = stats.fit_power_law(hist, fit_range)
    elif args.model == "shifted_power":
        fit = stats.fit_u_of_L(x, y, fit_range)
    elif args.model == "log_law":
        fit = stats.fit_log_law(x, y, fit_range)
    else:
        if args.b is None:
            raise ParamError("shifted_log needs --b")
        fit = stats.fit_shifted_log(x, y, args.b, fit_range)
    rows = fit.rows()
    if args.out:
        write_kv(args.out, rows, run_id_for({"cmd": "fit", "table": str(args.table), "model": args.model,
                                             "range": args.range}), "none")
    for k, v in rows:
        print(f"{k}\t{v}")
    return EXIT_OK


def _bin_starts(centers, widths):
    # centers are sqrt(first * last) with last = first + width - 1
    w = widths - 1.0
    return np.rint((-w + np.sqrt(w * w + 4 * centers * centers)) / 2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="forumsim", description="Agent-based forum discussion simulator and statistics.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--bin-ratio", type=float, default=stats.DEFAULT_BIN_RATIO)
        sp.add_argument("--fit-range", action="append", metavar="NAME=LO:HI",
                        help=f"override a fit range ({', '.join(DEFAULT_FIT_RANGES)})")

    s = sub.add_parser("simulate", help="run the model and analyse its output")
    s.add_argument("--config", help="key = value parameter file")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter")
    s.add_argument("--seed", type=int)
    s.add_argument("--n-threads", type=int)
    s.add_argument("--workers", type=int, default=1)
    common(s)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="analyse a post log")
    a.add_argument("--input", required=True)
    a.add_argument("--delimiter", choices=("tab", "comma"), default="tab")
    a.add_argument("--source-rows", action="store_true", help="rows with post_index 0 are source messages")
    a.add_argument("--seed", type=int, default=0, help="seed of the valence shuffle")
    common(a)
    a.set_defaults(func=cmd_analyze)

    w = sub.add_parser("sweep", help="run a parameter sweep plan")
    w.add_argument("--plan", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--replicates", type=int)
    w.add_argument("--bin-ratio", type=float, default=stats.DEFAULT_BIN_RATIO)
    w.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fit", help="fit a law to an emitted table")
    f.add_argument("--table", required=True)
    f.add_argument("--model", choices=("power_law", "shifted_power", "log_law", "shifted_log"), required=True)
    f.add_argument("--range", metavar="LO:HI")
    f.add_argument("--b", type=float, help="fixed shift for shifted_log")
    f.add_argument("--out", help="also write the fit table here")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParamError as exc:
        print(f"forumsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"forumsim: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"forumsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"forumsim: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
