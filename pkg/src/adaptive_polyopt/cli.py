"""Batch experiment runner.

Subcommands: ``run`` a config's scenario-by-seed matrix, ``postprocess`` a run
directory (fills perturbation norms and writes summaries), ``check`` a config
without running, and ``accept`` for the acceptance suite.  Output lands under
``--out-dir``, the ``ADAPTIVE_POLYOPT_OUT`` environment variable, or ``./runs``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import Cell, config_hash, expand_cells, load_config
from .errors import ConfigError, InvalidSpecError, RunAbortError
from .metrics import compute_report
from .optimizers import MGAPS
from .simulate import extract_zeta, replay_exact, run_meta
from .trace import atomic_write_text, read_trace, render_trace, write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_MISMATCH = 4

_GNUPLOT_TEMPLATE = """\
# usage: gnuplot -e "cell='<cell-id>'" plot.gp
set datafile separator whitespace
set xlabel "t"
set ylabel "cumulative local regret density"
set key left top
plot sprintf("%s.plot.dat", cell) using 1:2 with lines title cell
"""


def _out_root(args) -> str:
    if args.out_dir:
        return args.out_dir
    return os.environ.get("ADAPTIVE_POLYOPT_OUT", "runs")


def _dump_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _plot_lines(pg_norms_sq: np.ndarray) -> str:
    cum = np.cumsum(pg_norms_sq)
    lines = [
        f"{t} {format(cum[t] / (t + 1), '.17g')}" for t in range(pg_norms_sq.shape[0])
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def _process_cell(cell: Cell, run_dir: str, outputs: dict, chash: str) -> dict:
    record = run_meta(cell.spec, cell.alg, cell.est, cell.seed, config_hash=chash)
    want_trace = outputs.get("trace_csv", True)
    want_summary = outputs.get("summary_json", True)
    want_plot = outputs.get("plot_data", False)
    trace_path = os.path.join(run_dir, f"{cell.cell_id}.csv")
    summary = {
        "cell_id": cell.cell_id,
        "seed": cell.seed,
        "config_hash": chash,
        "T": cell.spec.horizon,
        "alg": dataclasses.asdict(cell.alg),
        "est": dataclasses.asdict(cell.est),
    }
    line = {"cell_id": cell.cell_id, "T": cell.spec.horizon, "cost": float(np.sum(record.costs))}
    if want_trace:
        write_trace(trace_path, record)
    if want_summary or want_plot:
        # Replay-based quantities compare against the ideal accumulator
        # update, which only the accumulator optimizer realizes.
        if cell.alg.kind == MGAPS and len(record) > 0:
            replay = replay_exact(cell.spec, record.thetas, cell.seed)
            zetas = extract_zeta(cell.spec, record, replay)
        else:
            replay = zetas = None
        report = compute_report(cell.spec, record, replay=replay, zetas=zetas)
        summary.update(report.to_dict())
        if want_trace and zetas is not None:
            atomic_write_text(
                trace_path, render_trace(record, np.linalg.norm(zetas, axis=1))
            )
        if want_summary:
            _dump_json(os.path.join(run_dir, f"{cell.cell_id}.summary.json"), summary)
        if want_plot:
            atomic_write_text(
                os.path.join(run_dir, f"{cell.cell_id}.plot.dat"),
                _plot_lines(report.pg_norms_sq),
            )
        line["local_regret"] = summary.get("local_regret")
    return line


def _print_line(line: dict, quiet: bool) -> None:
    if quiet:
        return
    parts = [f"cell={line['cell_id']}", f"T={line['T']}", f"total_cost={line['cost']:.6g}"]
    if line.get("local_regret") is not None:
        parts.append(f"local_regret={line['local_regret']:.6g}")
    print("  ".join(parts))


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        cells = expand_cells(cfg, seed_override=args.seed_override)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    chash = config_hash(cfg)
    run_dir = os.path.join(_out_root(args), chash)
    os.makedirs(run_dir, exist_ok=True)
    _dump_json(os.path.join(run_dir, "config.json"), cfg)
    manifest = {
        "config_hash": chash,
        "cells": [{"cell_id": c.cell_id, "seed": c.seed, "T": c.spec.horizon} for c in cells],
    }
    _dump_json(os.path.join(run_dir, "manifest.json"), manifest)
    outputs = cfg.get("outputs") or {}
    if outputs.get("plot_data"):
        atomic_write_text(os.path.join(run_dir, "plot.gp"), _GNUPLOT_TEMPLATE)
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = [
                    pool.submit(_process_cell, cell, run_dir, outputs, chash) for cell in cells
                ]
                lines = [f.result() for f in futures]
        else:
            lines = [_process_cell(cell, run_dir, outputs, chash) for cell in cells]
    except RunAbortError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    for line in lines:
        _print_line(line, args.quiet)
    if not args.quiet:
        print(f"run directory: {run_dir}")
    return EXIT_OK


def cmd_postprocess(args) -> int:
    run_dir = args.run_dir
    try:
        cfg = load_config(os.path.join(run_dir, "config.json"))
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    cells = expand_cells(cfg)
    chash = config_hash(cfg)
    outputs = dict(cfg.get("outputs") or {})
    outputs["summary_json"] = True
    if outputs.get("plot_data"):
        atomic_write_text(os.path.join(run_dir, "plot.gp"), _GNUPLOT_TEMPLATE)
    for cell in cells:
        trace_path = os.path.join(run_dir, f"{cell.cell_id}.csv")
        if os.path.exists(trace_path):
            table = read_trace(trace_path)
            if len(table) != cell.spec.horizon:
                print(
                    f"length mismatch in {cell.cell_id}: trace has {len(table)} rows, "
                    f"config says {cell.spec.horizon}",
                    file=sys.stderr,
                )
                return EXIT_MISMATCH
        try:
            line = _process_cell(cell, run_dir, outputs, chash)
        except RunAbortError as exc:
            print(f"divergence in {cell.cell_id}: {exc}", file=sys.stderr)
            return EXIT_DIVERGENCE
        _print_line(line, args.quiet)
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        cfg = load_config(args.config)
        cells = expand_cells(cfg)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {len(cells)} cells, hash {config_hash(cfg)}")
    return EXIT_OK


def cmd_accept(args) -> int:
    from .acceptance import run_all

    results = run_all(quiet=args.quiet)
    failed = [r for r in results if r.status == "fail"]
    return EXIT_OK if not failed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="adaptive-polyopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config's scenario/seed matrix")
    p_run.add_argument("config")
    p_run.add_argument("--seed-override", type=int, default=None)
    p_run.add_argument("--out-dir", default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_post = sub.add_parser("postprocess", help="fill perturbation norms and write summaries")
    p_post.add_argument("run_dir")
    p_post.add_argument("--quiet", action="store_true")
    p_post.set_defaults(func=cmd_postprocess)

    p_check = sub.add_parser("check", help="validate a config without running")
    p_check.add_argument("config")
    p_check.set_defaults(func=cmd_check)

    p_acc = sub.add_parser("accept", help="run the acceptance suite")
    p_acc.add_argument("--quiet", action="store_true")
    p_acc.set_defaults(func=cmd_accept)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
