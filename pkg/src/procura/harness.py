"""Experiment runner: design a surrogate, run an engine, compare with the offline optimum."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cost_model import (
    CostFunction,
    SolverConfig,
    SurrogateSpec,
    validate_assumptions,
)
from .grid import GridSpec, Variant
from .instances import GeneratorSpec, load_instance
from .offline import Instance, solve_offline
from .online import run_sequential, run_simultaneous
from .surrogate import alpha_ratio, design_chan, design_poly, design_quasiconvex

log = logging.getLogger(__name__)

STRATEGIES = ("identity", "poly", "chan", "quasiconvex")
RATIO_TOL = 1e-6


@dataclass(frozen=True)
class Strategy:
    name: str
    epsilon: float = 0.01
    alpha_upper: float | None = None

    def __post_init__(self):
        if self.name not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.name!r}; choose from {', '.join(STRATEGIES)}")

    @classmethod
    def parse(cls, item) -> "Strategy":
        if isinstance(item, Strategy):
            return item
        if isinstance(item, str):
            return cls(item)
        return cls(**item)


@dataclass(frozen=True)
class ExperimentConfig:
    cost: CostFunction
    strategies: tuple[Strategy, ...]
    instance: Instance | GeneratorSpec
    engine: str = "simultaneous"
    offset: float = 0.0
    solver: SolverConfig = SolverConfig()
    grid_step: float | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if not self.strategies:
            raise ValueError("an experiment needs at least one strategy")
        names = [s.name for s in self.strategies]
        if len(set(names)) != len(names):
            raise ValueError("strategy names must be unique")
        if self.engine not in ("simultaneous", "sequential"):
            raise ValueError(f"engine must be 'simultaneous' or 'sequential', got {self.engine!r}")
        if self.engine == "sequential" and self.offset < 0:
            raise ValueError("offset must be nonnegative")

    @property
    def variant(self) -> Variant:
        if self.engine == "simultaneous":
            return Variant.SIM
        return Variant.SEQ1 if self.offset == 1.0 else Variant.SEQ0

    def build_instance(self) -> Instance:
        if isinstance(self.instance, GeneratorSpec):
            return self.instance.build(self.cost)
        return self.instance

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        base_dir = base_dir or Path(".")
        if "cost_file" in data:
            cost = CostFunction.from_dict(json.loads((base_dir / data["cost_file"]).read_text(encoding="utf-8")))
        else:
            cost = CostFunction.from_dict(data["cost"])
        inst_data = data.get("instance", {})
        if "generator" in inst_data:
            instance = GeneratorSpec.from_dict(inst_data["generator"])
        elif "file" in inst_data:
            instance = load_instance(base_dir / inst_data["file"])
        else:
            instance = Instance.from_dict(inst_data)
        engine = data.get("engine", {"kind": "simultaneous"})
        if isinstance(engine, str):
            engine = {"kind": engine}
        return cls(
            cost=cost,
            strategies=tuple(Strategy.parse(s) for s in data.get("strategies", [])),
            instance=instance,
            engine=engine.get("kind", "simultaneous"),
            offset=float(engine.get("offset", 0.0)),
            solver=SolverConfig.from_dict(data.get("solver")),
            grid_step=data.get("grid_step"),
            out_dir=data.get("out_dir"),
        )


@dataclass
class StrategyResult:
    name: str
    Ps: float = math.nan
    Pstar: float = math.nan
    ratio: float = math.nan
    alpha: float = math.nan
    bound: float = math.nan
    passed: bool = False
    curve: np.ndarray | None = None
    design: dict | None = None
    validation: dict | None = None
    error: str | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "strategy": self.name,
            "Ps": self.Ps,
            "Pstar": self.Pstar,
            "ratio": self.ratio,
            "alpha": self.alpha,
            "bound": self.bound,
            "pass": self.passed,
            "design": self.design,
            "validation": self.validation,
            "error": self.error,
            "seconds": self.seconds,
        }


@dataclass
class ExperimentReport:
    variant: Variant
    horizon: int
    results: list[StrategyResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, name: str) -> StrategyResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "horizon": self.horizon,
            "all_passed": self.all_passed,
            "strategies": [r.to_dict() for r in self.results],
        }


def _ratio_grid(cfg: ExperimentConfig, variant: Variant, T: int) -> GridSpec:
    # keep the default grid near 100 steps per axis for long horizons
    step = cfg.grid_step if cfg.grid_step is not None else max(0.1, T / 100.0)
    return GridSpec.for_variant(variant, T, cfg.cost.dimension, step=step)


def build_surrogate(strategy: Strategy, f: CostFunction, variant: Variant, grid: GridSpec, solver: SolverConfig):
    """Return the surrogate spec for a strategy and a JSON-ready description."""
    if strategy.name == "identity":
        return SurrogateSpec.identity(f), {"mode": "identity"}
    if strategy.name == "poly":
        spec, bound = design_poly(f)
        return spec, {"mode": "scaled", "rho": spec.rho, "closed_form_bound": bound}
    if strategy.name == "chan":
        spec = design_chan(f)
        return spec, {"mode": "scaled", "rho": spec.rho}
    report = design_quasiconvex(f, variant, grid, strategy.epsilon, strategy.alpha_upper, solver)
    return report.design, {"mode": "weighted", "weights": list(report.weights), "alpha": report.alpha}


def ratio_passes(ratio: float, bound: float, tol: float = RATIO_TOL) -> bool:
    return bool(ratio >= bound - tol)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every strategy on one instance; a failing strategy is recorded,
    never raised, so the others still complete."""
    inst = cfg.build_instance()
    f = cfg.cost
    variant = cfg.variant
    grid = _ratio_grid(cfg, variant, inst.horizon)
    report = ExperimentReport(variant, inst.horizon)
    try:
        pstar = solve_offline(inst, f, cfg.solver).objective
        pstar_error = None
    except Exception as exc:  # noqa: BLE001 - reported per strategy
        pstar, pstar_error = math.nan, f"offline solve failed: {exc}"

    for strategy in cfg.strategies:
        res = StrategyResult(strategy.name)
        t0 = time.perf_counter()
        try:
            spec, res.design = build_surrogate(strategy, f, variant, grid, cfg.solver)
            fs = spec.expand()
            check = validate_assumptions(f, spec, inst.horizon, variant, grid, cfg.solver)
            res.validation = {"ok": check.ok, "failed": check.failed(), "warnings": check.warnings}
            if cfg.engine == "simultaneous":
                record = run_simultaneous(inst, fs, f, cfg.solver)
            else:
                record = run_sequential(inst, fs, f, cfg.offset, cfg.solver)
            res.Ps = record.Ps
            res.curve = record.cumulative_objective
            if pstar_error:
                raise RuntimeError(pstar_error)
            res.Pstar = pstar
            res.alpha = alpha_ratio(f, fs, variant, grid, cfg.solver)
            res.bound = 0.0 if math.isinf(res.alpha) else 1.0 / res.alpha
            if res.Pstar > RATIO_TOL:
                res.ratio = res.Ps / res.Pstar
            else:
                # nothing to earn: any nonnegative outcome is optimal
                res.ratio = 1.0 if res.Ps >= -RATIO_TOL else -math.inf
            res.passed = ratio_passes(res.ratio, res.bound)
        except Exception as exc:  # noqa: BLE001 - isolation is the point
            log.warning("strategy %s failed: %s", strategy.name, exc)
            res.error = f"{type(exc).__name__}: {exc}"
            res.passed = False
        res.seconds = time.perf_counter() - t0
        report.results.append(res)
    return report


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return repr(float(x))


def curve_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "strategy", "cumulative_objective"])
    for r in report.results:
        if r.curve is None:
            continue
        for t, val in enumerate(r.curve, start=1):
            w.writerow([t, r.name, _fmt(val)])
    return buf.getvalue()


def summary_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "Ps", "Pstar", "ratio", "bound", "pass"])
    for r in report.results:
        w.writerow([r.name, _fmt(r.Ps), _fmt(r.Pstar), _fmt(r.ratio), _fmt(r.bound), _fmt(r.passed)])
    return buf.getvalue()


def emit_csv(report: ExperimentReport, path) -> tuple[Path, Path]:
    """Write ``curve.csv`` and ``summary.csv`` into directory ``path``.

    Each file is written to a temporary sibling and renamed into place, so
    a failed write leaves no partial file.
    """
    out = Path(path)
    curve, summary = out / "curve.csv", out / "summary.csv"
    _atomic_write(curve, curve_csv(report))
    _atomic_write(summary, summary_csv(report))
    return curve, summary


def emit_json(report: ExperimentReport, path) -> Path:
    target = Path(path) / "report.json"
    _atomic_write(target, json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n")
    return target


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_summary(path) -> list[dict]:
    """Parse a summary CSV back into typed rows."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "strategy": row["strategy"],
                    "Ps": float(row["Ps"]),
                    "Pstar": float(row["Pstar"]),
                    "ratio": float(row["ratio"]),
                    "bound": float(row["bound"]),
                    "pass": row["pass"] == "true",
                }
            )
    return rows
