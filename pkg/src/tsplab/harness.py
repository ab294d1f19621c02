"""Evaluation records, aggregate tables, and the method registry."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from . import exact, heuristics
from .errors import ConfigError, InputError
from .geometry import DistanceMatrix, Tour, tour_length
from .instances import Instance
from .model import decode_greedy, load_params


@dataclass(frozen=True)
class EvalRecord:
    instance_id: str
    method: str
    tour_len: float
    opt_len: float | None
    gap_pct: float | None
    wall_ms: float


CSV_COLUMNS = ["instance_id", "method", "tour_len", "opt_len", "gap_pct", "wall_ms"]


def _nn_two_opt(inst: Instance, m: DistanceMatrix, ctx: dict) -> Tour:
    start = heuristics.nearest_neighbor(m, ctx["cfg"])
    return heuristics.two_opt(m, start, mode="best_improvement")


def _opt_tour(inst: Instance, m: DistanceMatrix, ctx: dict) -> Tour:
    tours = ctx.get("opt_tours") or {}
    if inst.id not in tours:
        raise ConfigError(f"no reference tour available for instance {inst.id}")
    return tours[inst.id]


_METHODS = {
    "nearest-neighbor": lambda inst, m, ctx: heuristics.nearest_neighbor(m, ctx["cfg"]),
    "nearest-insertion": lambda inst, m, ctx: heuristics.insertion(m, "NEAREST", ctx["cfg"]),
    "farthest-insertion": lambda inst, m, ctx: heuristics.insertion(m, "FARTHEST", ctx["cfg"]),
    "random-insertion": lambda inst, m, ctx: heuristics.insertion(m, "RANDOM", ctx["cfg"]),
    "cheapest-insertion": lambda inst, m, ctx: heuristics.insertion(m, "CHEAPEST", ctx["cfg"]),
    "cheapest-link": lambda inst, m, ctx: heuristics.cheapest_link(m),
    "mst-walk": lambda inst, m, ctx: heuristics.mst_walk(m),
    "christofides": lambda inst, m, ctx: heuristics.christofides(m),
    "two-opt": _nn_two_opt,  # the classic baseline: NN start + best-improvement
    "held-karp": lambda inst, m, ctx: exact.held_karp(m).tour,
    "brute-force": lambda inst, m, ctx: exact.brute_force(m).tour,
    "opt-tour": _opt_tour,
}

ORACLES = ("held-karp", "opt-tour")


def method_names() -> list[str]:
    return sorted(_METHODS) + ["model:<checkpoint>"]


def _resolve_method(name: str, ctx: dict):
    if name.startswith("model:"):
        path = name.split(":", 1)[1]
        if path not in ctx["models"]:
            ctx["models"][path] = load_params(path)
        params = ctx["models"][path]
        return lambda inst, m, c: decode_greedy(inst, params)
    if name not in _METHODS:
        raise ConfigError(f"unknown method {name!r}; known: {', '.join(method_names())}")
    return _METHODS[name]


def _oracle_length(inst: Instance, m: DistanceMatrix, oracle: str | None, ctx: dict) -> float | None:
    if oracle is None:
        return None
    if oracle == "held-karp":
        if m.n > exact.HELD_KARP_MAX_N:
            return None
        return exact.held_karp(m).length
    if oracle == "opt-tour":
        tours = ctx.get("opt_tours") or {}
        if inst.id not in tours:
            return None
        return tour_length(m, tours[inst.id])
    raise ConfigError(f"unknown oracle {oracle!r}; known: {', '.join(ORACLES)}")


def evaluate(
    instances: list[Instance],
    methods: list[str],
    oracle: str | None = None,
    *,
    cfg: heuristics.HeuristicConfig | None = None,
    opt_tours: dict[str, Tour] | None = None,
    measure_time: bool = True,
) -> list[EvalRecord]:
    """Run each method on each instance, attaching the oracle optimum when
    one is available. Records come back in (instance, method) order."""
    ctx = {
        "cfg": cfg or heuristics.HeuristicConfig(),
        "opt_tours": opt_tours,
        "models": {},
    }
    solvers = [(name, _resolve_method(name, ctx)) for name in methods]
    records = []
    for inst in instances:
        m = inst.matrix()
        opt_len = _oracle_length(inst, m, oracle, ctx)
        for name, solver in solvers:
            t0 = time.perf_counter()
            tour = solver(inst, m, ctx)
            wall_ms = (time.perf_counter() - t0) * 1000.0 if measure_time else 0.0
            length = tour_length(m, tour)
            gap = 100.0 * (length - opt_len) / opt_len if opt_len else None
            records.append(
                EvalRecord(
                    instance_id=inst.id,
                    method=name,
                    tour_len=length,
                    opt_len=opt_len,
                    gap_pct=gap,
                    wall_ms=wall_ms,
                )
            )
    return records


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_records_csv(records: list[EvalRecord], path_or_buf) -> None:
    own = isinstance(path_or_buf, str)
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([r.instance_id, r.method, _fmt(r.tour_len), _fmt(r.opt_len), _fmt(r.gap_pct), _fmt(r.wall_ms)])
    finally:
        if own:
            fh.close()


def read_records_csv(path: str) -> list[EvalRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            records.append(
                EvalRecord(
                    instance_id=row["instance_id"],
                    method=row["method"],
                    tour_len=float(row["tour_len"]),
                    opt_len=float(row["opt_len"]) if row["opt_len"] else None,
                    gap_pct=float(row["gap_pct"]) if row["gap_pct"] else None,
                    wall_ms=float(row["wall_ms"]) if row["wall_ms"] else 0.0,
                )
            )
    return records


def table(records: list[EvalRecord]) -> tuple[str, str]:
    """Aggregate per-method means; returns (aligned text, CSV) strings."""
    if not records:
        raise InputError("cannot render a table from zero records")
    order: list[str] = []
    groups: dict[str, list[EvalRecord]] = {}
    for r in records:
        if r.method not in groups:
            order.append(r.method)
            groups[r.method] = []
        groups[r.method].append(r)

    header = ["method", "mean_tour_len", "mean_gap_pct", "count", "mean_wall_ms"]
    rows = []
    for method in order:
        grp = groups[method]
        mean_len = float(np.mean([r.tour_len for r in grp]))
        gaps = [r.gap_pct for r in grp if r.gap_pct is not None]
        mean_gap = float(np.mean(gaps)) if gaps else None
        mean_ms = float(np.mean([r.wall_ms for r in grp]))
        rows.append(
            [
                method,
                f"{mean_len:.4f}",
                "" if mean_gap is None else f"{mean_gap:.2f}",
                str(len(grp)),
                f"{mean_ms:.3f}",
            ]
        )

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    csv_text = buf.getvalue()

    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    lines += ["  ".join(r[i].ljust(widths[i]) for i in range(len(header))) for r in rows]
    return "\n".join(lines) + "\n", csv_text
