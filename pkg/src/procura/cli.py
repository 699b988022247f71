"""Command line entry point: ``procura design|run|offline|experiment|generate``."""

from __future__ import annotations

import dataclasses
import json
import logging
import sys
from pathlib import Path

import click

from .cost_model import CostFunction, SolverConfig
from .errors import InfeasibleError
from .grid import GridSpec, Variant
from .harness import (
    ExperimentConfig,
    Strategy,
    _atomic_write,
    build_surrogate,
    emit_csv,
    emit_json,
    run_experiment,
)
from .instances import GeneratorSpec
from .offline import solve_offline
from .online import run_sequential, run_simultaneous
from .surrogate import alpha_ratio, design_quasiconvex

VARIANTS = click.Choice([v.value for v in Variant])


def _load_config(path: str | None) -> tuple[dict, Path]:
    if path is None:
        return {}, Path(".")
    p = Path(path)
    return json.loads(p.read_text(encoding="utf-8")), p.parent


def _apply_overrides(data: dict, seed, grid_step, offset, variant) -> dict:
    data = dict(data)
    if seed is not None:
        data["solver"] = {**(data.get("solver") or {}), "seed": seed}
        gen = data.get("instance", {}).get("generator")
        if gen is not None:
            data["instance"] = {"generator": {**gen, "seed": seed}}
    if grid_step is not None:
        data["grid_step"] = grid_step
    engine = data.get("engine", {"kind": "simultaneous"})
    if isinstance(engine, str):
        engine = {"kind": engine}
    if variant is not None:
        engine = {"kind": "simultaneous"} if variant == "sim" else {"kind": "sequential", "offset": 0.0 if variant == "seq0" else 1.0}
    if offset is not None:
        engine = {"kind": "sequential", "offset": float(offset)}
    data["engine"] = engine
    return data


def _out_dir(out: str | None) -> Path:
    path = Path(out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fail(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(2)


common_options = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file."),
    click.option("--out", type=click.Path(file_okay=False), help="Output directory."),
    click.option("--seed", type=int, default=None, help="Seed for the solver and random instances."),
    click.option("--grid-step", type=float, default=None, help="Ratio grid spacing."),
]


def with_common(fn):
    for opt in reversed(common_options):
        fn = opt(fn)
    return fn


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Online allocation with increasing procurement costs."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@with_common
@click.option("--strategy", type=click.Choice(["poly", "chan", "quasiconvex"]), default="quasiconvex")
@click.option("--variant", type=VARIANTS, default="sim")
@click.option("--horizon", type=int, default=None, help="Horizon T (defaults to the config's).")
@click.option("--epsilon", type=float, default=0.01, help="Bisection tolerance on alpha.")
@click.option("--alpha-upper", type=float, default=None, help="Upper end of the bisection interval.")
def design(config_path, out, seed, grid_step, strategy, variant, horizon, epsilon, alpha_upper):
    """Design a surrogate for the config's cost and report its bound."""
    data, base = _load_config(config_path)
    if "cost" not in data:
        _fail("the config needs a 'cost' entry")
    f = CostFunction.from_dict(data["cost"])
    T = horizon or data.get("horizon") or data.get("instance", {}).get("generator", {}).get("T")
    if not T:
        _fail("pass --horizon or set 'horizon' in the config")
    cfg = SolverConfig.from_dict(data.get("solver"))
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    v = Variant.parse(variant)
    grid = GridSpec.for_variant(v, int(T), f.dimension, step=grid_step or data.get("grid_step") or 0.1)
    try:
        if strategy == "quasiconvex":
            report = design_quasiconvex(f, v, grid, epsilon, alpha_upper, cfg)
            payload = report.to_dict()
        else:
            spec, info = build_surrogate(Strategy(strategy), f, v, grid, cfg)
            alpha = alpha_ratio(f, spec.expand(), v, grid, cfg)
            payload = {
                "variant": v.value,
                "alpha": alpha,
                "bound": 0.0 if alpha == float("inf") else 1.0 / alpha,
                "grid": grid.to_dict(),
                "design": spec.to_dict(),
                **info,
            }
    except InfeasibleError as exc:
        _fail(str(exc))
    text = json.dumps(payload, indent=2) + "\n"
    _atomic_write(_out_dir(out) / "design.json", text)
    click.echo(f"{strategy} {v.value}: alpha={payload['alpha']:.6g} bound={payload['bound']:.6g}")


@main.command()
@with_common
@click.option("--strategy", type=click.Choice(["identity", "poly", "chan", "quasiconvex"]), default="poly")
@click.option("--variant", type=VARIANTS, default=None, help="Engine variant (overrides the config).")
@click.option("--offset", type=float, default=None, help="Run the posted-price engine with this offset.")
def run(config_path, out, seed, grid_step, strategy, variant, offset):
    """Run one online engine and write the per-step trace."""
    data, base = _load_config(config_path)
    data = _apply_overrides(data, seed, grid_step, offset, variant)
    data["strategies"] = [strategy]
    cfg = ExperimentConfig.from_dict(data, base)
    inst = cfg.build_instance()
    grid = GridSpec.for_variant(cfg.variant, inst.horizon, cfg.cost.dimension, step=cfg.grid_step or max(0.1, inst.horizon / 100))
    spec, _ = build_surrogate(Strategy(strategy), cfg.cost, cfg.variant, grid, cfg.solver)
    fs = spec.expand()
    if cfg.engine == "simultaneous":
        record = run_simultaneous(inst, fs, cfg.cost, cfg.solver)
    else:
        record = run_sequential(inst, fs, cfg.cost, cfg.offset, cfg.solver)
    _atomic_write(_out_dir(out) / "run.csv", record.to_csv())
    click.echo(f"{strategy} {cfg.variant.value}: Ps={record.Ps:.10g}")


@main.command()
@with_common
def offline(config_path, out, seed, grid_step):
    """Solve the offline problem for the config's instance."""
    data, base = _load_config(config_path)
    data = _apply_overrides(data, seed, grid_step, None, None)
    data.setdefault("strategies", ["identity"])
    cfg = ExperimentConfig.from_dict(data, base)
    sol = solve_offline(cfg.build_instance(), cfg.cost, cfg.solver)
    _atomic_write(_out_dir(out) / "offline.csv", sol.to_csv())
    click.echo(f"Pstar={sol.objective:.10g} converged={sol.converged}")


@main.command()
@with_common
@click.option("--variant", type=VARIANTS, default=None, help="Engine variant (overrides the config).")
@click.option("--offset", type=float, default=None, help="Posted-price offset (overrides the config).")
@click.option("--epsilon", type=float, default=None, help="Bisection tolerance for quasiconvex strategies.")
@click.option("--alpha-upper", type=float, default=None, help="Bisection upper end for quasiconvex strategies.")
def experiment(config_path, out, seed, grid_step, variant, offset, epsilon, alpha_upper):
    """Run every configured strategy; exit status 0 iff all pass."""
    data, base = _load_config(config_path)
    if not data:
        _fail("experiment needs --config")
    data = _apply_overrides(data, seed, grid_step, offset, variant)
    strategies = []
    for s in data.get("strategies", []):
        s = {"name": s} if isinstance(s, str) else dict(s)
        if s["name"] == "quasiconvex":
            if epsilon is not None:
                s["epsilon"] = epsilon
            if alpha_upper is not None:
                s["alpha_upper"] = alpha_upper
        strategies.append(s)
    data["strategies"] = strategies
    try:
        cfg = ExperimentConfig.from_dict(data, base)
    except (ValueError, KeyError) as exc:
        _fail(f"invalid config: {exc}")
    report = run_experiment(cfg)
    target = _out_dir(out or cfg.out_dir)
    emit_csv(report, target)
    emit_json(report, target)
    for r in report.results:
        status = "pass" if r.passed else "FAIL"
        detail = f" ({r.error})" if r.error else ""
        click.echo(f"{status} {r.name}: Ps={r.Ps:.6g} Pstar={r.Pstar:.6g} ratio={r.ratio:.6g} bound={r.bound:.6g}{detail}")
    sys.exit(0 if report.all_passed else 1)


@main.command()
@click.option("--kind", type=click.Choice(["scalar", "gradient", "random"]), required=True)
@click.option("-T", "--horizon", "T", type=int, required=True)
@click.option("-D", "--dimension", "D", type=int, default=1)
@click.option("--low", type=float, default=0.0)
@click.option("--high", type=float, default=1.0)
@click.option("--seed", type=int, default=0)
@click.option("--cost", "cost_path", type=click.Path(exists=True, dir_okay=False), help="Cost JSON (gradient kind).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Instance JSON path (stdout if omitted).")
def generate(kind, T, D, low, high, seed, cost_path, out):
    """Write a generated instance as JSON."""
    f = CostFunction.from_dict(json.loads(Path(cost_path).read_text(encoding="utf-8"))) if cost_path else None
    try:
        inst = GeneratorSpec(kind, T, D, low, high, seed).build(f)
    except ValueError as exc:
        _fail(str(exc))
    if out:
        _atomic_write(Path(out), inst.to_json())
    else:
        click.echo(inst.to_json(), nl=False)


if __name__ == "__main__":
    main()
