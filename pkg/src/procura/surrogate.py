"""Surrogate design and the ratio bounds that certify it.

For a surrogate f_s the guarantee of each engine is ``1 / alpha`` where
alpha is a supremum over a box of

    sim:   f*(grad f_s(u))     / (f_s(u) - f(u))
    seq0:  f*(grad f_s(u))     / (f_s(u) - f(u) - 1.(grad f_s(u) - grad f_s(0)))
    seq1:  f*(grad f_s(u + 1)) / (f_s(u) - f(u))

evaluated here on a uniform grid. Weighted designs ``f_s = sum_n a_n g_n``
make every numerator convex and every denominator linear in ``a``, so the
smallest alpha is found by bisection over convex feasibility problems.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .cost_model import (
    DEFAULT_CONFIG,
    CostFunction,
    SolverConfig,
    SurrogateSpec,
    _stationary_start,
    conjugate_cost_batch,
)
from .errors import InfeasibleError
from .grid import GridSpec, Variant

__all__ = [
    "DesignReport",
    "FeasibilityResult",
    "GridSpec",
    "RatioProfile",
    "Variant",
    "alpha_ratio",
    "design_chan",
    "design_poly",
    "design_quasiconvex",
    "feasibility_violation",
    "lemma2_gap",
    "optimal_rho",
    "ratio_profile",
    "rho_objective",
    "solve_feasibility",
]


# --------------------------------------------------------------------------
# closed-form scaling designs


def optimal_rho(tau: float) -> float:
    """Minimizer over rho > 1 of ``(tau - 1) rho**tau / (rho**(tau - 1) - 1)``."""
    if not tau >= 2:
        raise ValueError(f"the scaling design needs degree >= 2, got {tau}")
    return float(tau ** (1.0 / (tau - 1.0)))


def rho_objective(tau: float, rho: float) -> float:
    """Ratio bound of the scaled surrogate ``f(rho u) / rho`` for degree tau."""
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    return (tau - 1.0) * rho**tau / (rho ** (tau - 1.0) - 1.0)


def lemma2_gap(rho: float, a: float, b: float) -> float:
    """``b rho**(b - a) - a (rho**b - 1) / (rho**a - 1)``, nonnegative for 0 <= a <= b.

    At ``a = 0`` the second term takes its limit ``(rho**b - 1) / log(rho)``.
    """
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    log_rho = math.log(rho)
    x = a * log_rho
    # (rho**a - 1) / a, with its limit log(rho) once a * log(rho) underflows
    slope = log_rho if x == 0 else math.expm1(x) / a
    return b * rho ** (b - a) - math.expm1(b * log_rho) / slope


def design_poly(f: CostFunction) -> tuple[SurrogateSpec, float]:
    """Scaled surrogate tuned to the highest term degree, and its bound."""
    tau = f.max_degree
    if tau < 2:
        raise ValueError(f"highest term degree is {tau:g}; the scaling design needs at least 2")
    rho = optimal_rho(tau)
    return SurrogateSpec.scaled(f, rho), float(tau ** (-tau / (tau - 1.0)))


def design_chan(f: CostFunction) -> SurrogateSpec:
    """Baseline scaled surrogate tuned to the lowest term degree."""
    low = f.min_degree
    if low < 2:
        raise ValueError(f"lowest term degree is {low:g}; the baseline design needs at least 2")
    return SurrogateSpec.scaled(f, optimal_rho(low))


# --------------------------------------------------------------------------
# ratio evaluation


@dataclass
class RatioProfile:
    points: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    ratio: np.ndarray
    skipped: np.ndarray

    @property
    def alpha(self) -> float:
        live = ~self.skipped
        return float(self.ratio[live].max()) if live.any() else 0.0

    @property
    def worst_point(self) -> np.ndarray:
        live = np.nonzero(~self.skipped)[0]
        return self.points[live[np.argmax(self.ratio[live])]]


def ratio_profile(
    f: CostFunction,
    fs: CostFunction,
    variant=Variant.SIM,
    grid: GridSpec | None = None,
    cfg: SolverConfig = DEFAULT_CONFIG,
    horizon: int | None = None,
) -> RatioProfile:
    """Per-grid-point numerator, denominator and ratio for ``alpha_ratio``."""
    variant = Variant.parse(variant)
    if grid is None:
        if horizon is None:
            raise ValueError("pass either a grid or a horizon")
        grid = GridSpec.for_variant(variant, horizon, f.dimension)
    U = grid.points()
    at = U + 1.0 if variant is Variant.SEQ1 else U
    num = conjugate_cost_batch(f, fs.gradient(at), cfg).values
    den = fs(U) - f(U)
    if variant is Variant.SEQ0:
        den = den - (fs.gradient(U) - fs.gradient(np.zeros(f.dimension))[None, :]).sum(axis=1)
    tol = cfg.denom_tol
    skipped = (np.abs(den) < tol) & (num < tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den < tol, np.inf, num / np.where(den < tol, 1.0, den))
    ratio[skipped] = np.nan
    return RatioProfile(U, num, den, ratio, skipped)


def alpha_ratio(
    f: CostFunction,
    fs: CostFunction,
    variant=Variant.SIM,
    grid: GridSpec | None = None,
    cfg: SolverConfig = DEFAULT_CONFIG,
    horizon: int | None = None,
) -> float:
    """Grid supremum of the variant's ratio; ``inf`` when a denominator vanishes
    under a positive numerator."""
    if isinstance(fs, SurrogateSpec):
        fs = fs.expand()
    return ratio_profile(f, fs, variant, grid, cfg, horizon).alpha


# --------------------------------------------------------------------------
# weighted designs


class _WeightedProblem:
    """Grid data for ``f_s = sum_n a_n g_n`` with numerator/denominator in ``a``."""

    def __init__(self, f: CostFunction, variant: Variant, grid: GridSpec, cfg: SolverConfig):
        self.f = f
        self.variant = variant
        self.grid = grid
        self.cfg = cfg
        U = grid.points()
        at = U + 1.0 if variant is Variant.SEQ1 else U
        comps = f.components()
        self.points = U
        self.values = np.stack([g(U) for g in comps], axis=1)
        self.grads = np.stack([g.gradient(at) for g in comps], axis=1)
        self.f_values = f(U)
        self.den_coef = self.values.copy()
        if variant is Variant.SEQ0:
            zero = np.zeros(f.dimension)
            corr = [(g.gradient(U) - g.gradient(zero)[None, :]).sum(axis=1) for g in comps]
            self.den_coef -= np.stack(corr, axis=1)
        self._warm: np.ndarray | None = None

    @property
    def n_weights(self) -> int:
        return self.values.shape[1]

    def prices(self, a: np.ndarray) -> np.ndarray:
        return np.einsum("pnd,n->pd", self.grads, a)

    def numerator(self, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        L = self.prices(a)
        first = self._warm if self._warm is not None else _stationary_start(self.f, L)
        res = conjugate_cost_batch(self.f, L, self.cfg, starts=first[None])
        values, W = res.values, res.maximizers
        redo = np.nonzero(~res.converged)[0]
        if redo.size:
            # the objective is concave, so a second start only matters for stalls
            again = conjugate_cost_batch(self.f, L[redo], self.cfg)
            better = again.values > values[redo]
            values[redo[better]] = again.values[better]
            W[redo[better]] = again.maximizers[better]
        self._warm = W
        return values, W

    def denominator(self, a: np.ndarray) -> np.ndarray:
        return self.den_coef @ a - self.f_values

    def violation(self, a: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-point ``num - alpha * den`` and its subgradient in ``a``."""
        num, W = self.numerator(a)
        viol = num - alpha * self.denominator(a)
        sub = np.einsum("pd,pnd->pn", W, self.grads) - alpha * self.den_coef
        return viol, sub


def feasibility_violation(
    f: CostFunction,
    weights,
    alpha: float,
    variant=Variant.SIM,
    grid: GridSpec | None = None,
    cfg: SolverConfig = DEFAULT_CONFIG,
    horizon: int | None = None,
) -> tuple[float, np.ndarray]:
    """Largest ``numerator - alpha * denominator`` over the grid for weights ``a``.

    The basis is the partition stored on ``f``. Returns the violation and the
    grid point attaining it; a value <= ``cfg.feas_tol`` means feasible.
    """
    variant = Variant.parse(variant)
    if grid is None:
        grid = GridSpec.for_variant(variant, horizon, f.dimension)
    a = np.asarray(weights, dtype=float)
    SurrogateSpec.weighted(f, a)  # validates a >= 1 and the length
    prob = _WeightedProblem(f, variant, grid, cfg)
    viol, _ = prob.violation(a, alpha)
    k = int(np.argmax(viol))
    return float(viol[k]), prob.points[k]


@dataclass
class FeasibilityResult:
    feasible: bool
    weights: np.ndarray
    max_violation: float
    lower_bound: float
    iterations: int
    method: str


def _cutting_plane(prob: _WeightedProblem, alpha, cfg, a0, a_max, max_rounds, cuts_per_round):
    N = prob.n_weights
    tol = cfg.feas_tol
    a = np.clip(np.asarray(a0, dtype=float), 1.0, a_max)
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    best_a, best = a.copy(), math.inf
    lower = -math.inf
    bounds = [(1.0, a_max)] * N + [(None, None)]
    cost = np.zeros(N + 1)
    cost[-1] = 1.0
    for it in range(1, max_rounds + 1):
        viol, sub = prob.violation(a, alpha)
        top = float(viol.max())
        if top < best:
            best, best_a = top, a.copy()
        if best <= 0.0:
            return FeasibilityResult(True, best_a, best, lower, it, "cutting_plane")
        # linearizations s >= viol_p + sub_p . (x - a), written as sub_p . x - s <= sub_p . a - viol_p
        pick = np.argpartition(-viol, min(cuts_per_round, viol.size - 1))[:cuts_per_round]
        for p in pick:
            rows.append(np.append(sub[p], -1.0))
            rhs.append(float(sub[p] @ a - viol[p]))
        lp = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
        if lp.status != 0:
            break
        lower = max(lower, float(lp.fun))
        if lower > tol or best - lower <= tol:
            break
        a = lp.x[:N]
    return FeasibilityResult(best <= tol, best_a, best, lower, it, "cutting_plane")


def _subgradient(prob: _WeightedProblem, alpha, cfg, a0, a_max, max_rounds, restarts):
    rng = np.random.default_rng(cfg.seed)
    N = prob.n_weights
    best_a, best = np.clip(np.asarray(a0, dtype=float), 1.0, a_max), math.inf
    total = 0
    for r in range(restarts):
        a = best_a.copy() if r == 0 else 1.0 + rng.uniform(0.0, 1.0, N) * (best_a.max() + 1.0)
        for _ in range(max_rounds):
            total += 1
            viol, sub = prob.violation(a, alpha)
            k = int(np.argmax(viol))
            if viol[k] < best:
                best, best_a = float(viol[k]), a.copy()
            if best <= cfg.feas_tol:
                return FeasibilityResult(True, best_a, best, -math.inf, total, "subgradient")
            g = sub[k]
            gg = float(g @ g)
            if gg == 0.0:
                break
            # Polyak step towards the target value 0
            a = np.clip(a - (viol[k] / gg) * g, 1.0, a_max)
    return FeasibilityResult(False, best_a, best, -math.inf, total, "subgradient")


def solve_feasibility(
    f: CostFunction,
    alpha: float,
    variant=Variant.SIM,
    grid: GridSpec | None = None,
    cfg: SolverConfig = DEFAULT_CONFIG,
    method: str = "cutting_plane",
    start=None,
    a_max: float = 1e4,
    max_rounds: int = 300,
    horizon: int | None = None,
    _problem: _WeightedProblem | None = None,
) -> FeasibilityResult:
    """Search for weights ``a >= 1`` with every grid constraint
    ``numerator(u; a) <= alpha * denominator(u; a)`` satisfied.

    ``cutting_plane`` runs Kelley's method on the convex max-violation with
    an LP over the box ``[1, a_max]^N``; its LP value is a certified lower
    bound, so infeasibility is proven once it exceeds ``feas_tol``.
    ``subgradient`` runs projected Polyak subgradient descent with random
    restarts; its infeasible verdict is not certified.
    """
    variant = Variant.parse(variant)
    if not alpha >= 1:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    if _problem is None:
        if grid is None:
            grid = GridSpec.for_variant(variant, horizon, f.dimension)
        _problem = _WeightedProblem(f, variant, grid, cfg)
    a0 = np.full(_problem.n_weights, 2.0) if start is None else np.asarray(start, dtype=float)
    if method == "cutting_plane":
        return _cutting_plane(_problem, alpha, cfg, a0, a_max, max_rounds, cuts_per_round=4 * _problem.n_weights + 4)
    if method == "subgradient":
        return _subgradient(_problem, alpha, cfg, a0, a_max, max_rounds, restarts=5)
    raise ValueError(f"unknown feasibility method {method!r}")


@dataclass
class DesignReport:
    variant: Variant
    design: SurrogateSpec
    alpha: float
    achieved_alpha: float
    grid: GridSpec
    trace: list[tuple[float, bool, float]] = field(default_factory=list)
    epsilon: float = 0.0
    alpha_upper: float = 0.0
    method: str = "cutting_plane"
    seconds: float = 0.0

    @property
    def bound(self) -> float:
        return 0.0 if math.isinf(self.alpha) else 1.0 / self.alpha

    @property
    def weights(self) -> tuple[float, ...]:
        return self.design.weights

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "weights": list(self.weights) if self.weights is not None else None,
            "alpha": self.alpha,
            "achieved_alpha": self.achieved_alpha,
            "bound": self.bound,
            "epsilon": self.epsilon,
            "alpha_upper": self.alpha_upper,
            "method": self.method,
            "seconds": self.seconds,
            "grid": self.grid.to_dict(),
            "trace": [{"alpha": a, "feasible": ok, "max_violation": v} for a, ok, v in self.trace],
            "design": self.design.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def default_alpha_upper(f: CostFunction, variant, grid: GridSpec, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Four times the scaling design's ratio when that is finite, else 1e3."""
    try:
        spec, _ = design_poly(f)
        alpha = alpha_ratio(f, spec.expand(), variant, grid, cfg)
    except (ValueError, ArithmeticError):
        return 1e3
    return 4.0 * alpha if math.isfinite(alpha) and alpha > 0 else 1e3


def design_quasiconvex(
    f: CostFunction,
    variant=Variant.SIM,
    grid: GridSpec | None = None,
    epsilon: float = 0.01,
    alpha_upper: float | None = None,
    cfg: SolverConfig = DEFAULT_CONFIG,
    method: str = "cutting_plane",
    horizon: int | None = None,
) -> DesignReport:
    """Smallest-alpha weights on the basis of ``f`` by bisection on alpha.

    The interval starts at ``[1, alpha_upper]`` and halves until its width is
    at most ``epsilon``; every midpoint is a convex feasibility problem. The
    returned weights certify the final upper end of the interval.
    """
    variant = Variant.parse(variant)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if grid is None:
        grid = GridSpec.for_variant(variant, horizon, f.dimension)
    if alpha_upper is None:
        alpha_upper = default_alpha_upper(f, variant, grid, cfg)
    if not alpha_upper > 1:
        raise ValueError("alpha_upper must exceed 1")
    t0 = time.perf_counter()
    prob = _WeightedProblem(f, variant, grid, cfg)
    first = solve_feasibility(f, alpha_upper, variant, cfg=cfg, method=method, _problem=prob)
    trace = [(float(alpha_upper), first.feasible, first.max_violation)]
    if not first.feasible:
        raise InfeasibleError(
            f"no weights reach alpha_upper={alpha_upper:g} for variant {variant.value} "
            f"(max violation {first.max_violation:.3g}); try a larger alpha_upper"
        )
    upper, lower = float(alpha_upper), 1.0
    weights = first.weights
    while upper - lower > epsilon:
        mid = 0.5 * (upper + lower)
        res = solve_feasibility(f, mid, variant, cfg=cfg, method=method, start=weights, _problem=prob)
        trace.append((mid, res.feasible, res.max_violation))
        if res.feasible:
            upper, weights = mid, res.weights
        else:
            lower = mid
    spec = SurrogateSpec.weighted(f, tuple(float(a) for a in weights))
    achieved = alpha_ratio(f, spec.expand(), variant, grid, cfg)
    return DesignReport(
        variant,
        spec,
        upper,
        achieved,
        grid,
        trace,
        epsilon,
        float(alpha_upper),
        method,
        time.perf_counter() - t0,
    )
