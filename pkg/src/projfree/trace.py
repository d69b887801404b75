"""Per-outer-iteration trace records and their fixed CSV schema.

The CSV layout is frozen: one header line, 17-significant-digit decimals,
LF line endings. wall_ms is measured in memory but written as 0.0 unless a
run opts into recorded wall time, so that identical (config, seed) reruns
produce byte-identical files; measured totals live in the run manifest.
"""

import csv
from dataclasses import dataclass

import numpy as np

CSV_HEADER = (
    "outer_t,f_value,gap_to_ref,dist_to_star_F,dist_to_ref_F,"
    "cum_component_grads,cum_full_grads,cum_lo_calls,cum_projections,"
    "wall_ms,max_inner_gap"
)

_INT_FIELDS = (
    "outer_t",
    "cum_component_grads",
    "cum_full_grads",
    "cum_lo_calls",
    "cum_projections",
)


@dataclass
class TraceRecord:
    outer_t: int
    f_value: float
    gap_to_ref: float
    dist_to_star_F: float
    dist_to_ref_F: float
    cum_component_grads: int
    cum_full_grads: int
    cum_lo_calls: int
    cum_projections: int
    wall_ms: float
    max_inner_gap: float


@dataclass
class TraceContext:
    """Reference/ground-truth data used to enrich trace rows.

    Missing pieces leave NaN in the corresponding columns.
    """

    theta_ref: np.ndarray | None = None
    f_ref: float | None = None
    theta_star: np.ndarray | None = None


def make_record(theta, outer_t, f_value, ledger, wall_ms, max_inner_gap, ctx=None):
    gap = float("nan")
    dist_ref = float("nan")
    dist_star = float("nan")
    if ctx is not None:
        if ctx.f_ref is not None:
            gap = f_value - ctx.f_ref
        if ctx.theta_ref is not None:
            dist_ref = float(np.linalg.norm(theta - ctx.theta_ref))
        if ctx.theta_star is not None:
            dist_star = float(np.linalg.norm(theta - ctx.theta_star))
    return TraceRecord(
        outer_t=outer_t,
        f_value=f_value,
        gap_to_ref=gap,
        dist_to_star_F=dist_star,
        dist_to_ref_F=dist_ref,
        cum_component_grads=ledger.component_grad_evals,
        cum_full_grads=ledger.full_grad_passes,
        cum_lo_calls=ledger.lo_calls,
        cum_projections=ledger.projection_calls,
        wall_ms=wall_ms,
        max_inner_gap=max_inner_gap,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(path, records, record_wall_time: bool = False) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            wall = r.wall_ms if record_wall_time else 0.0
            fh.write(
                ",".join(
                    [
                        str(r.outer_t),
                        _fmt(r.f_value),
                        _fmt(r.gap_to_ref),
                        _fmt(r.dist_to_star_F),
                        _fmt(r.dist_to_ref_F),
                        str(r.cum_component_grads),
                        str(r.cum_full_grads),
                        str(r.cum_lo_calls),
                        str(r.cum_projections),
                        _fmt(wall),
                        _fmt(r.max_inner_gap),
                    ]
                )
                + "\n"
            )


def read_trace_csv(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or ",".join(reader.fieldnames) != CSV_HEADER:
            raise ValueError(f"{path}: trace header does not match the fixed schema")
        out = []
        for row in reader:
            kwargs = {}
            for name in TraceRecord.__dataclass_fields__:
                kwargs[name] = (
                    int(row[name]) if name in _INT_FIELDS else float(row[name])
                )
            out.append(TraceRecord(**kwargs))
    return out
