"""Static SVG convergence plots from trace CSVs."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# keep legend/axis text as text elements in the SVG (greppable, smaller files)
matplotlib.rcParams["svg.fonttype"] = "none"

from .errors import ConfigError
from .trace import read_trace_csv

X_AXES = ("wall_ms", "cum_component_grads", "cum_lo_calls")
Y_AXES = ("f_value", "gap_to_ref")


def emit_plot(trace_files, x_axis: str, y_axis: str, out_path) -> str:
    """Log-scale-y line plot, one series per trace file, legend in input order.

    Pure function of the inputs (the SVG carries no timestamp metadata).
    """
    if x_axis not in X_AXES:
        raise ConfigError(f"x_axis must be one of {X_AXES}, got {x_axis!r}")
    if y_axis not in Y_AXES:
        raise ConfigError(f"y_axis must be one of {Y_AXES}, got {y_axis!r}")
    trace_files = list(trace_files)
    if not trace_files:
        raise ConfigError("emit_plot needs at least one trace file")
    series = []
    for path in trace_files:
        try:
            records = read_trace_csv(path)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"malformed trace file {path}: {exc}") from exc
        if not records:
            raise ConfigError(f"trace file {path} has no rows")
        xs = [getattr(r, x_axis) for r in records]
        ys = [getattr(r, y_axis) for r in records]
        series.append((str(path), xs, ys))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, xs, ys in series:
        stem = label.rsplit("/", 1)[-1]
        if stem.endswith(".csv"):
            stem = stem[:-4]
        ax.plot(xs, ys, label=stem)
    ax.set_yscale("log")
    ax.set_xlabel(x_axis)
    ax.set_ylabel(y_axis)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(out_path)
