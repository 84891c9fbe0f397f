"""Trace CSV files: fixed column order, 17-significant-digit decimals so every
64-bit float round-trips exactly, and atomic writes (temp file + rename).

The zeta_norm column stays blank until postprocessing fills it.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidSpecError


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_header(n: int, d: int, p: int, m: int) -> list[str]:
    cols = ["t"]
    cols += [f"x_{i}" for i in range(n)]
    cols += [f"y_{i}" for i in range(n * d)]  # row-major flattening of the accumulator
    cols += [f"theta_{i}" for i in range(d)]
    cols += [f"ahat_{i}" for i in range(p)]
    cols += [f"astar_{i}" for i in range(p)]
    cols += [f"u_{i}" for i in range(m)]
    cols += ["cost", "eps0", "eps1", "est_loss", "g_norm", "zeta_norm"]
    return cols


@dataclass
class TraceTable:
    """Parsed trace contents; zeta_norms is None when the column is blank."""

    n: int
    d: int
    p: int
    m: int
    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    thetas: np.ndarray
    a_hats: np.ndarray
    a_stars: np.ndarray
    us: np.ndarray
    costs: np.ndarray
    eps0: np.ndarray
    eps1: np.ndarray
    est_loss: np.ndarray
    g_norms: np.ndarray
    zeta_norms: Optional[np.ndarray]

    def __len__(self) -> int:
        return self.ts.shape[0]


def render_trace(record, zeta_norms: Optional[np.ndarray] = None) -> str:
    """Serialize a trajectory record to CSV text."""
    spec = record.spec
    n, d, p, m = spec.n, spec.d, spec.p, spec.m
    horizon = len(record)
    if zeta_norms is None and record.zeta_norms is not None:
        zeta_norms = record.zeta_norms
    if zeta_norms is not None and len(zeta_norms) != horizon:
        raise InvalidSpecError("zeta series length does not match the trace")
    lines = [",".join(trace_header(n, d, p, m))]
    for t in range(horizon):
        vals = [str(t)]
        vals += [_fmt(v) for v in record.xs[t]]
        vals += [_fmt(v) for v in record.ys[t].reshape(-1)]
        vals += [_fmt(v) for v in record.thetas[t]]
        vals += [_fmt(v) for v in record.a_hats[t]]
        vals += [_fmt(v) for v in record.a_stars[t]]
        vals += [_fmt(v) for v in record.us[t]]
        vals += [
            _fmt(record.costs[t]),
            _fmt(record.eps0[t]),
            _fmt(record.eps1[t]),
            _fmt(record.est_loss[t]),
            _fmt(float(np.linalg.norm(record.g_approx[t]))),
        ]
        vals.append("" if zeta_norms is None else _fmt(zeta_norms[t]))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def write_trace(path: str, record, zeta_norms: Optional[np.ndarray] = None) -> None:
    atomic_write_text(path, render_trace(record, zeta_norms))


def _dims_from_header(header: list[str]):
    def count(prefix: str) -> int:
        return sum(1 for c in header if c.startswith(prefix))

    n = count("x_")
    nd = count("y_")
    d = count("theta_")
    p = count("ahat_")
    m = count("u_")
    if n == 0 or d == 0 or nd != n * d or count("astar_") != p:
        raise InvalidSpecError("malformed trace header")
    return n, d, p, m


def parse_trace(text: str) -> TraceTable:
    lines = text.splitlines()
    if not lines:
        raise InvalidSpecError("empty trace file")
    header = lines[0].split(",")
    n, d, p, m = _dims_from_header(header)
    expected = trace_header(n, d, p, m)
    if header != expected:
        raise InvalidSpecError("trace header does not match the frozen column order")
    rows = [ln.split(",") for ln in lines[1:] if ln != ""]
    horizon = len(rows)
    width = len(expected)
    data = np.zeros((horizon, width - 2))  # all numeric columns except t and zeta
    ts = np.zeros(horizon, dtype=int)
    zeta = np.zeros(horizon)
    has_zeta = horizon > 0
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InvalidSpecError(f"trace row {i} has {len(row)} fields, expected {width}")
        ts[i] = int(row[0])
        data[i] = [float(v) for v in row[1:-1]]
        if row[-1] == "":
            has_zeta = False
        else:
            zeta[i] = float(row[-1])
    c = 0

    def take(count: int) -> np.ndarray:
        nonlocal c
        block = data[:, c : c + count]
        c += count
        return block

    xs = take(n)
    ys = take(n * d).reshape(horizon, n, d)
    thetas = take(d)
    a_hats = take(p)
    a_stars = take(p)
    us = take(m)
    costs, eps0, eps1, est_loss, g_norms = (take(1)[:, 0] for _ in range(5))
    return TraceTable(
        n=n, d=d, p=p, m=m, ts=ts, xs=xs, ys=ys, thetas=thetas,
        a_hats=a_hats, a_stars=a_stars, us=us, costs=costs, eps0=eps0,
        eps1=eps1, est_loss=est_loss, g_norms=g_norms,
        zeta_norms=zeta if has_zeta else None,
    )


def read_trace(path: str) -> TraceTable:
    with open(path, "r", newline="") as fh:
        return parse_trace(fh.read())


def render_table(table: TraceTable) -> str:
    """Re-serialize a parsed table; byte-identical to the original file."""
    lines = [",".join(trace_header(table.n, table.d, table.p, table.m))]
    for i in range(len(table)):
        vals = [str(int(table.ts[i]))]
        vals += [_fmt(v) for v in table.xs[i]]
        vals += [_fmt(v) for v in table.ys[i].reshape(-1)]
        vals += [_fmt(v) for v in table.thetas[i]]
        vals += [_fmt(v) for v in table.a_hats[i]]
        vals += [_fmt(v) for v in table.a_stars[i]]
        vals += [_fmt(v) for v in table.us[i]]
        vals += [
            _fmt(table.costs[i]),
            _fmt(table.eps0[i]),
            _fmt(table.eps1[i]),
            _fmt(table.est_loss[i]),
            _fmt(table.g_norms[i]),
        ]
        vals.append("" if table.zeta_norms is None else _fmt(table.zeta_norms[i]))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
