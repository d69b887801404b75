"""Experiment runner: config parsing, per-seed execution, CSV + manifest output.

A config is a JSON tree (see README for the full shape):

    {
      "generator": {"d": 30, "r": 2, "alpha": 10, "L": 10.0, "sigma_hat": 1.0,
                     "rho": 50.0, "label_noise_std": 0.1, "w_scale": 0.0, "seed": 0},
      "solver": "cgs",
      "solver_options": {"outer_iters": 6},
      "reference": {"policy": "compute", "tol": 1e-9},
      "seeds": [1, 2, 3],
      "out_dir": "runs/demo",
      "record_wall_time": false
    }

Each seed generates its own instance, obtains the certified reference, runs
the configured solver, and writes one CSV; the manifest records every default
and generation decision in effect plus measured timings and final counters.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineConfig, run_pgd, run_svrg
from .cgs import CgsConfig, default_delta0, inner_iters, run_cgs
from .errors import ConfigError, SolverError
from .ledger import CostLedger
from .matreg import GenSpec, generate, genspec_to_dict, make_ground_truth
from .model import Problem
from .nuclear_ball import NuclearBall
from .reference import Reference, compute_reference, default_cache_dir
from .storc import COMPONENT_CONVEX, COMPONENT_NONCONVEX, StorcConfig, minibatch_size, run_storc
from .trace import TraceContext, write_trace_csv

SOLVERS = ("cgs", "storc", "pgd", "svrg")

_GEN_FIELDS = {
    "d": int,
    "r": int,
    "alpha": int,
    "L": float,
    "sigma_hat": float,
    "rho": float,
    "seed": int,
    "label_noise_std": float,
    "w_scale": float,
}
_GEN_REQUIRED = ("d", "r", "alpha", "L", "sigma_hat", "rho")

_SOLVER_OPTION_KEYS = {
    "cgs": {"outer_iters", "delta0", "gap_tol", "max_fw_iters"},
    "storc": {"outer_iters", "delta0", "gap_tol", "max_fw_iters", "scale_minibatch"},
    "pgd": {"step_size", "iters"},
    "svrg": {"step_size", "iters", "svrg_epoch_len", "svrg_batch"},
}


@dataclass
class ExperimentConfig:
    generator: GenSpec
    solver: str
    solver_options: dict
    reference_policy: str
    reference_tol: float
    reference_path: str | None
    out_dir: Path
    seeds: list
    record_wall_time: bool = False
    cache_dir: Path | None = None
    power_iter_tol: float = 1e-10
    power_iter_max: int | None = None


@dataclass
class RunResult:
    solver: str
    seed: int
    csv_path: Path
    theta: np.ndarray
    ledger: CostLedger
    reference: Reference
    wall_ms: float


@dataclass
class ExperimentResult:
    runs: list = field(default_factory=list)
    manifest_path: Path | None = None

    @property
    def csv_paths(self):
        return [r.csv_path for r in self.runs]


def _expect(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"missing config key {where}{key}")
    return mapping[key]


def parse_genspec(block, where="generator.") -> GenSpec:
    if not isinstance(block, dict):
        raise ConfigError(f"config key {where[:-1]} must be an object")
    for key in block:
        if key not in _GEN_FIELDS:
            raise ConfigError(f"unknown config key {where}{key}")
    kwargs = {}
    for key in _GEN_REQUIRED:
        _expect(block, key, where)
    for key, caster in _GEN_FIELDS.items():
        if key in block:
            try:
                kwargs[key] = caster(block[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {where}{key}: {exc}") from exc
    try:
        return GenSpec(**kwargs)
    except ConfigError:
        raise
    except Exception as exc:  # invariant violations surface as config errors
        raise ConfigError(f"invalid {where[:-1]} block: {exc}") from exc


def load_experiment_config(source) -> ExperimentConfig:
    """Accepts a dict or a path to a JSON file; validates key by key."""
    if isinstance(source, (str, Path)):
        try:
            with open(source) as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {source}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {source} is not valid JSON: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {
        "generator",
        "solver",
        "solver_options",
        "reference",
        "seeds",
        "out_dir",
        "record_wall_time",
        "cache_dir",
        "power_iter_tol",
        "power_iter_max",
    }
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key {key}")
    gen = parse_genspec(_expect(data, "generator", ""))
    solver = _expect(data, "solver", "")
    if solver not in SOLVERS:
        raise ConfigError(f"config key solver: expected one of {SOLVERS}, got {solver!r}")
    options = data.get("solver_options", {})
    if not isinstance(options, dict):
        raise ConfigError("config key solver_options must be an object")
    for key in options:
        if key not in _SOLVER_OPTION_KEYS[solver]:
            raise ConfigError(f"unknown config key solver_options.{key} for solver {solver}")
    ref_block = data.get("reference", {"policy": "compute", "tol": 1e-9})
    if not isinstance(ref_block, dict):
        raise ConfigError("config key reference must be an object")
    policy = ref_block.get("policy", "compute")
    if policy not in ("compute", "load"):
        raise ConfigError("config key reference.policy: expected 'compute' or 'load'")
    ref_path = ref_block.get("path")
    if policy == "load" and not ref_path:
        raise ConfigError("config key reference.path required for policy 'load'")
    seeds = _expect(data, "seeds", "")
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("config key seeds must be a nonempty list of integers")
    if not all(isinstance(s, int) for s in seeds):
        raise ConfigError("config key seeds must contain integers only")
    out_dir = Path(_expect(data, "out_dir", ""))
    cache_dir = data.get("cache_dir")
    return ExperimentConfig(
        generator=gen,
        solver=solver,
        solver_options=dict(options),
        reference_policy=policy,
        reference_tol=float(ref_block.get("tol", 1e-9)),
        reference_path=ref_path,
        out_dir=out_dir,
        seeds=list(seeds),
        record_wall_time=bool(data.get("record_wall_time", False)),
        cache_dir=Path(cache_dir) if cache_dir else None,
        power_iter_tol=float(data.get("power_iter_tol", 1e-10)),
        power_iter_max=data.get("power_iter_max"),
    )


def make_instance(gen: GenSpec, seed: int):
    """Ground truth + problem for one run seed (truth nuclear norm = rho)."""
    rng = np.random.default_rng(seed)
    truth = make_ground_truth(gen.d, gen.r, gen.rho, rng)
    problem = generate(gen, truth, rng)
    return truth, problem


def build_solver_config(cfg: ExperimentConfig, p: Problem, seed: int):
    """Resolve the per-run solver configuration with documented defaults."""
    opts = cfg.solver_options
    theta0 = np.zeros((p.dim, p.dim))
    if cfg.solver in ("cgs", "storc"):
        delta0 = opts.get("delta0")
        if delta0 is None:
            delta0 = default_delta0(p, theta0, cfg.generator.rho)
        common = dict(
            L=p.smoothness_L,
            sigma_hat=p.rsc_sigma_hat,
            delta0=float(delta0),
            outer_iters=int(opts.get("outer_iters", 6)),
            rho=cfg.generator.rho,
            theta0=theta0,
            seed=seed,
            gap_tol=opts.get("gap_tol"),
            max_fw_iters=opts.get("max_fw_iters"),
        )
        if cfg.solver == "cgs":
            return CgsConfig(**common)
        mode = COMPONENT_NONCONVEX if p.kind == "nonconvex" else COMPONENT_CONVEX
        return StorcConfig(
            **common,
            lower_smoothness_l=p.lower_smoothness_l,
            convexity_mode=mode,
            scale_minibatch=float(opts.get("scale_minibatch", 1.0)),
        )
    return BaselineConfig(
        step_size=opts.get("step_size"),
        iters=int(opts.get("iters", 100)),
        svrg_epoch_len=opts.get("svrg_epoch_len"),
        svrg_batch=int(opts.get("svrg_batch", 1)),
        seed=seed,
    )


def _dispatch(solver, p, ball, solver_cfg, ledger, ctx):
    if solver == "cgs":
        return run_cgs(p, ball, solver_cfg, ledger, trace_ctx=ctx)
    if solver == "storc":
        return run_storc(p, ball, solver_cfg, ledger, trace_ctx=ctx)
    if solver == "pgd":
        return run_pgd(p, ball, solver_cfg, ledger, trace_ctx=ctx)
    return run_svrg(p, ball, solver_cfg, ledger, trace_ctx=ctx)


def _load_reference(path, p: Problem) -> Reference:
    theta = np.load(path)
    if theta.shape != (p.dim, p.dim):
        raise ConfigError(
            f"reference at {path} has shape {theta.shape}, expected ({p.dim}, {p.dim})"
        )
    from .model import objective_value

    return Reference(
        theta=theta,
        f_value=objective_value(p, theta),
        gap=float("nan"),
        tol=float("nan"),
        iters=0,
        from_cache=True,
        cache_key="loaded",
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = cfg.cache_dir if cfg.cache_dir is not None else default_cache_dir()
    result = ExperimentResult()
    manifest_runs = []
    for seed in cfg.seeds:
        truth, p = make_instance(cfg.generator, seed)
        ball = NuclearBall(
            radius=cfg.generator.rho,
            dim=p.dim,
            power_iter_tol=cfg.power_iter_tol,
            power_iter_max=cfg.power_iter_max,
        )
        if cfg.reference_policy == "load":
            ref = _load_reference(cfg.reference_path, p)
        else:
            ref = compute_reference(p, ball, cfg.reference_tol, cache_dir=cache_dir)
        ctx = TraceContext(theta_ref=ref.theta, f_ref=ref.f_value, theta_star=truth.theta_star)
        solver_cfg = build_solver_config(cfg, p, seed)
        ledger = CostLedger()
        started = time.perf_counter()
        try:
            theta, trace = _dispatch(cfg.solver, p, ball, solver_cfg, ledger, ctx)
        except SolverError as exc:
            raise SolverError(f"solver={cfg.solver} seed={seed}: {exc}") from exc
        wall_ms = (time.perf_counter() - started) * 1e3
        csv_path = out_dir / f"{cfg.solver}_seed{seed}.csv"
        write_trace_csv(csv_path, trace, record_wall_time=cfg.record_wall_time)
        result.runs.append(
            RunResult(
                solver=cfg.solver,
                seed=seed,
                csv_path=csv_path,
                theta=theta,
                ledger=ledger,
                reference=ref,
                wall_ms=wall_ms,
            )
        )
        manifest_runs.append(
            {
                "solver": cfg.solver,
                "seed": seed,
                "csv": csv_path.name,
                "reference": {
                    "tol": cfg.reference_tol,
                    "achieved_gap": ref.gap,
                    "f_value": ref.f_value,
                    "cache_key": ref.cache_key,
                    "from_cache": ref.from_cache,
                },
                "counters": ledger.as_dict(),
                "wall_ms_total": wall_ms,
                "solver_config": _describe_solver_config(cfg, solver_cfg, p),
            }
        )
    manifest = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "generator": genspec_to_dict(cfg.generator),
        "solver": cfg.solver,
        "solver_options": cfg.solver_options,
        "reference_policy": cfg.reference_policy,
        "seeds": cfg.seeds,
        "record_wall_time": cfg.record_wall_time,
        "decisions": {
            "label_noise_std_default": 0.1,
            "truth_nuclear_norm": cfg.generator.rho,
            "rsc_discount": {"convex": 0.5, "nonconvex": 0.25},
            "wall_ms_in_csv": "measured only when record_wall_time is true",
            "svrg_defaults": {"step": "1/(10 L)", "epoch_len": "2 n", "batch": 1},
            "pgd_default_step": "1/L",
            "vr_sample_cost": "2 component gradients per sampled index; bypass counts n",
            "minibatch_bypass": "m >= n uses the exact gradient",
        },
        "runs": manifest_runs,
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.manifest_path = manifest_path
    return result


def _describe_solver_config(cfg, solver_cfg, p):
    if cfg.solver in ("cgs", "storc"):
        desc = {
            "L": solver_cfg.L,
            "sigma_hat": solver_cfg.sigma_hat,
            "delta0": solver_cfg.delta0,
            "outer_iters": solver_cfg.outer_iters,
            "rho": solver_cfg.rho,
            "inner_iters": inner_iters(solver_cfg),
        }
        if cfg.solver == "storc":
            desc["scale_minibatch"] = solver_cfg.scale_minibatch
            desc["convexity_mode"] = solver_cfg.convexity_mode
            desc["minibatch_size"] = minibatch_size(solver_cfg, inner_iters(solver_cfg))
            desc["lower_smoothness_l"] = solver_cfg.lower_smoothness_l
        return desc
    return {
        "step_size": solver_cfg.step_size,
        "iters": solver_cfg.iters,
        "svrg_epoch_len": solver_cfg.svrg_epoch_len,
        "svrg_batch": solver_cfg.svrg_batch,
    }
