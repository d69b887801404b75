"""Command-line interface.

Subcommands: generate (instance to file), solve (one solver, one seed),
bench (full config: all seeds + plot), plot (traces -> SVG), check
(curvature/cone diagnostics). Exit codes: 0 success, 2 config error,
3 solver failure, 4 guard violation.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ProjfreeError
from .experiment import (
    ExperimentConfig,
    load_experiment_config,
    make_instance,
    parse_genspec,
    run_experiment,
)
from .matreg import (
    cone_check,
    gamma_extreme_eigs,
    genspec_to_dict,
    rsc_margin,
    save_problem,
)
from .nuclear_ball import NuclearBall
from .plotting import X_AXES, Y_AXES, emit_plot
from .reference import compute_reference, default_cache_dir
from .trace import read_trace_csv


def _load_config_dict(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc


def _genspec_from_config(path, seed_override=None):
    data = _load_config_dict(path)
    block = data.get("generator", data) if isinstance(data, dict) else data
    gen = parse_genspec(block)
    if seed_override is not None:
        gen = parse_genspec({**genspec_to_dict(gen), "seed": seed_override})
    return gen


def cmd_generate(args) -> int:
    gen = _genspec_from_config(args.config, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth, problem = make_instance(gen, gen.seed)
    stem = f"matreg_d{gen.d}_r{gen.r}_n{gen.n}_seed{gen.seed}"
    bin_path = out_dir / f"{stem}.bin"
    save_problem(
        bin_path,
        problem,
        sidecar={"genspec": genspec_to_dict(gen), "package_version": __version__},
    )
    print(bin_path)
    print(bin_path.with_suffix(".json"))
    return 0


def _experiment_config(args, single_seed=None) -> ExperimentConfig:
    cfg = load_experiment_config(args.config)
    if args.out is not None:
        cfg.out_dir = Path(args.out)
    if getattr(args, "tol", None) is not None:
        cfg.reference_tol = args.tol
    if single_seed is not None:
        cfg.seeds = [single_seed]
    return cfg


def cmd_solve(args) -> int:
    seed = args.seed
    cfg = load_experiment_config(args.config)
    if seed is None:
        seed = cfg.seeds[0]
    cfg = _experiment_config(args, single_seed=seed)
    result = run_experiment(cfg)
    for run in result.runs:
        print(run.csv_path)
    print(result.manifest_path)
    return 0


def cmd_bench(args) -> int:
    cfg = _experiment_config(args)
    result = run_experiment(cfg)
    for run in result.runs:
        print(run.csv_path)
    print(result.manifest_path)
    svg = Path(cfg.out_dir) / f"{cfg.solver}_gap_vs_grads.svg"
    emit_plot(result.csv_paths, "cum_component_grads", "gap_to_ref", svg)
    print(svg)
    return 0


def cmd_plot(args) -> int:
    for path in args.traces:
        if not Path(path).exists():
            raise ConfigError(f"trace file not found: {path}")
        read_trace_csv(path)  # schema check up front
    emit_plot(args.traces, args.x, args.y, args.out)
    print(args.out)
    return 0


def cmd_check(args) -> int:
    gen = _genspec_from_config(args.config, args.seed)
    rng = np.random.default_rng(gen.seed)
    truth, problem = make_instance(gen, gen.seed)
    ball = NuclearBall(radius=gen.rho, dim=gen.d)
    report = rsc_margin(problem, gen.rho, args.pairs, rng)
    out = {
        "kind": problem.kind,
        "rsc_margin": {
            "pairs": report.pairs,
            "sigma_c": report.sigma_c,
            "tau_base": report.tau_base,
            "fractions": {str(c): f for c, f in report.fractions.items()},
        },
    }
    if problem.kind == "nonconvex":
        lam_min, lam_max = gamma_extreme_eigs(problem, rng)
        out["hessian_eigs"] = {"min": lam_min, "max": lam_max}
    if args.tol is not None:
        ref = compute_reference(
            problem, ball, args.tol, cache_dir=default_cache_dir()
        )
        cone = cone_check(np.zeros((gen.d, gen.d)), ref.theta, truth, gen.rho)
        out["cone_check_at_zero"] = {
            "ok": cone.ok,
            "slack": cone.slack,
            "boundary_gap": cone.boundary_gap,
        }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projfree",
        description="Projection-free solvers for nuclear-norm constrained matrix regression",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a problem instance to disk")
    p.add_argument("--config", required=True, help="JSON config (generator block)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run one solver for one seed")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--tol", type=float, default=None, help="reference tolerance")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run the full config (all seeds) and plot")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render trace CSVs to an SVG")
    p.add_argument("traces", nargs="+")
    p.add_argument("--x", choices=X_AXES, default="cum_component_grads")
    p.add_argument("--y", choices=Y_AXES, default="gap_to_ref")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("check", help="curvature and cone diagnostics")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument(
        "--tol",
        type=float,
        default=None,
        help="also compute a reference and report the cone check",
    )
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProjfreeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
