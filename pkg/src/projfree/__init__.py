"""projfree: projection-free first-order solvers (conditional gradient
sliding and its variance-reduced variant) for nuclear-norm constrained
matrix regression, plus projected baselines and a benchmark harness."""

__version__ = "0.1.0"

from .baselines import BaselineConfig, run_pgd, run_svrg
from .cgs import CgsConfig, default_delta0, inner_iters, run_cgs, schedule
from .errors import (
    ConfigError,
    GuardViolation,
    PowerIterationError,
    ProjfreeError,
    SolverError,
    SubsolverError,
)
from .experiment import (
    ExperimentConfig,
    load_experiment_config,
    make_instance,
    run_experiment,
)
from .fw_subsolver import SubproblemSpec, default_max_fw_iters, solve_subproblem
from .ledger import CostLedger
from .matreg import (
    GenSpec,
    GroundTruth,
    cone_check,
    gamma_extreme_eigs,
    generate_convex,
    generate_nonconvex,
    load_problem,
    make_ground_truth,
    rsc_margin,
    save_problem,
)
from .model import (
    ParamMatrix,
    Problem,
    component_gradient,
    full_gradient,
    objective_value,
    vr_gradient,
)
from .nuclear_ball import (
    NuclearBall,
    contains,
    l1_ball_project,
    linear_oracle,
    nuclear_norm,
    project,
    wolfe_gap,
)
from .plotting import emit_plot
from .reference import Reference, compute_reference
from .storc import StorcConfig, minibatch_size, run_storc
from .trace import CSV_HEADER, TraceContext, TraceRecord, read_trace_csv, write_trace_csv
