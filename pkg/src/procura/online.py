"""Online engines: simultaneous update and sequential posted pricing."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._boxsolve import BoxResult, newton_maximize
from .cost_model import (
    DEFAULT_CONFIG,
    CostFunction,
    SolverConfig,
    Valuation,
    concave_conjugate_at_gradient,
    conjugate_cost,
    eval_valuation,
    grad_valuation,
)
from .errors import ConvergenceError, DomainError
from .grid import Variant
from .offline import Instance

_POWER_FLOOR = 1e-12


@dataclass
class RunRecord:
    """Per-step trace of one online run.

    Row t of each matrix holds step t + 1. ``cumulative_objective[t]`` is
    ``sum_{i<=t} v_i(x_i) - f(S_t)`` with the true cost f.
    """

    allocations: np.ndarray
    prices: np.ndarray
    value_grads: np.ndarray
    cumulative: np.ndarray
    values: np.ndarray
    cumulative_objective: np.ndarray
    engine: str
    offset: np.ndarray | None = None
    converged: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.allocations.shape[0]

    @property
    def dimension(self) -> int:
        return self.allocations.shape[1]

    @property
    def Ps(self) -> float:
        return float(self.cumulative_objective[-1])

    @property
    def total(self) -> np.ndarray:
        return self.cumulative[-1]

    @property
    def variant(self) -> Variant:
        if self.engine == "simultaneous":
            return Variant.SIM
        if self.offset is not None and np.all(self.offset == 1.0):
            return Variant.SEQ1
        return Variant.SEQ0

    def surrogate_margin(self, fs: CostFunction) -> float:
        """The quantity each engine's nonnegativity lemma keeps >= 0.

        Simultaneous and offset-1 runs: ``sum_t v_t(x_t) - f_s(S_T)``.
        Offset-0 runs add ``1.(grad f_s(S_T) - grad f_s(0))``.
        """
        margin = float(self.values.sum()) - fs(self.total)
        if self.engine == "sequential" and self.variant is Variant.SEQ0:
            margin += float(np.sum(fs.gradient(self.total) - fs.gradient(np.zeros(self.dimension))))
        return margin

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        D = self.dimension
        w.writerow(
            ["t"] + [f"x_{d + 1}" for d in range(D)] + [f"lambda_{d + 1}" for d in range(D)] + ["cumulative_objective"]
        )
        for t in range(self.horizon):
            row = [t + 1]
            row += [repr(float(x)) for x in self.allocations[t]]
            row += [repr(float(x)) for x in self.prices[t]]
            row.append(repr(float(self.cumulative_objective[t])))
            w.writerow(row)
        return buf.getvalue()


def _box_floor(v: Valuation) -> np.ndarray:
    # concave power coordinates never sit at 0 (infinite marginal value there)
    c = v.coef_array
    return np.where((v.p < 1.0) & (c > 0), _POWER_FLOOR, 0.0)


def _valuation_hess(v: Valuation, x: np.ndarray) -> np.ndarray:
    if v.is_linear:
        return np.zeros((x.size, x.size))
    c = v.coef_array
    with np.errstate(divide="ignore"):
        diag = np.where(c > 0, c * v.p * (v.p - 1.0) * x ** (v.p - 2.0), 0.0)
    return np.diag(diag)


def _solve_marginal(v: Valuation, fs: CostFunction, S: np.ndarray, cfg: SolverConfig) -> BoxResult:
    lo = _box_floor(v)
    hi = np.ones(v.dimension)
    c = v.coef_array
    if not np.any(c > 0):
        return BoxResult(np.zeros(v.dimension), 0.0, True, 0, 0.0)
    base = fs(S)

    def fun(x):
        return float(np.dot(c, x**v.p)) - fs(S + x) + base

    def grad(x):
        return grad_valuation(v, x) - fs.gradient(S + x)

    def hess(x):
        return _valuation_hess(v, x) - fs.hessian(S + x)

    return newton_maximize(fun, grad, hess, np.maximum(lo, 0.5), lo, hi, cfg.max_iters, cfg.grad_tol)


def step_marginal(
    v: Valuation,
    fs: CostFunction,
    S,
    cfg: SolverConfig = DEFAULT_CONFIG,
    strict: bool = False,
) -> np.ndarray:
    """Maximize ``v(x) - f_s(S + x) + f_s(S)`` over ``[0, 1]^D``.

    Projected Newton on a concave objective; with ``strict`` a solve that
    misses the tolerance raises instead of returning the best iterate.
    """
    S = np.asarray(S, dtype=float).reshape(-1)
    if np.any(S < 0):
        raise DomainError("cumulative allocation must be nonnegative")
    res = _solve_marginal(v, fs, S, cfg)
    if not res.converged and strict:
        raise ConvergenceError(f"marginal step stalled with projected gradient {res.proj_grad:.3g}")
    return res.x


def _record(inst, f, X, prices, Z, engine, offset=None, converged=None, flags=None) -> RunRecord:
    cumulative = np.cumsum(X, axis=0)
    values = np.array([eval_valuation(v, x) for v, x in zip(inst.valuations, X)])
    cum_obj = np.cumsum(values) - f(cumulative)
    return RunRecord(X, prices, Z, cumulative, values, cum_obj, engine, offset, converged, flags or [])


def run_simultaneous(
    inst: Instance,
    fs: CostFunction,
    f: CostFunction,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> RunRecord:
    """Simultaneous-update engine.

    Each arrival solves the marginal problem against ``f_s``; the price read
    off afterwards is ``grad f_s(S_t)`` and the valuation gradient is taken at
    the chosen allocation. The reported objective uses the true cost ``f``.
    """
    T, D = inst.horizon, inst.dimension
    X = np.zeros((T, D))
    prices = np.zeros((T, D))
    Z = np.zeros((T, D))
    ok = np.ones(T, dtype=bool)
    S = np.zeros(D)
    for t, v in enumerate(inst.valuations):
        try:
            res = _solve_marginal(v, fs, S, cfg)
        except (DomainError, ArithmeticError) as exc:
            raise type(exc)(f"step {t + 1}: {exc}") from exc
        x = res.x
        ok[t] = res.converged
        S = S + x
        X[t] = x
        prices[t] = fs.gradient(S)
        Z[t] = grad_valuation(v, x)
    flags = [] if ok.all() else [f"{int((~ok).sum())} marginal steps missed the tolerance"]
    return _record(inst, f, X, prices, Z, "simultaneous", converged=ok, flags=flags)


def posted_price(fs: CostFunction, S, offset) -> np.ndarray:
    """The price ``grad f_s(S + offset)`` posted before the next arrival."""
    S = np.asarray(S, dtype=float).reshape(-1)
    offset = np.broadcast_to(np.asarray(offset, dtype=float), S.shape)
    if np.any(offset < 0):
        raise DomainError("price offset must be nonnegative")
    return fs.gradient(S + offset)


def best_response(v: Valuation, price) -> np.ndarray:
    """Customer's utility-maximizing allocation ``argmax v(x) - price.x`` on the box.

    Linear valuations take a coordinate exactly when its value is at least
    the price (ties allocate); concave powers use the stationarity closed form.
    Coordinates the customer does not value at all are never allocated, even
    at a zero price.
    """
    price = np.asarray(price, dtype=float).reshape(-1)
    c = v.coef_array
    if v.is_linear:
        return ((c >= price) & (c > 0)).astype(float)
    x = np.ones(v.dimension)
    pos = price > 0
    x[pos] = np.minimum(1.0, (c[pos] * v.p / price[pos]) ** (1.0 / (1.0 - v.p)))
    x[c == 0] = 0.0
    return x


def run_sequential(
    inst: Instance,
    fs: CostFunction,
    f: CostFunction,
    offset=0.0,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> RunRecord:
    """Posted-pricing engine.

    The price for step t depends only on earlier allocations and the offset;
    the arriving customer then best-responds to it. Offsets other than the
    all-zeros and all-ones vectors run but are flagged as unanalyzed.
    """
    T, D = inst.horizon, inst.dimension
    off = np.broadcast_to(np.asarray(offset, dtype=float), (D,)).copy()
    flags = []
    if not (np.all(off == 0.0) or np.all(off == 1.0)):
        flags.append("unanalyzed offset: ratio guarantees cover only offsets 0 and 1")
        warnings.warn(flags[-1], RuntimeWarning, stacklevel=2)
    X = np.zeros((T, D))
    prices = np.zeros((T, D))
    Z = np.zeros((T, D))
    S = np.zeros(D)
    for t, v in enumerate(inst.valuations):
        lam = posted_price(fs, S, off)
        x = best_response(v, lam)
        prices[t] = lam
        X[t] = x
        Z[t] = grad_valuation(v, np.maximum(x, _box_floor(v)))
        S = S + x
    return _record(inst, f, X, prices, Z, "sequential", offset=off, converged=np.ones(T, dtype=bool), flags=flags)


def compute_Ds(record: RunRecord, inst: Instance, f: CostFunction, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Dual value of a run: hinge terms at each step's price, minus the
    valuations' conjugates at the recorded gradients, plus ``f*`` at the
    final price."""
    hinge = float(np.maximum(record.value_grads - record.prices, 0.0).sum())
    inner = sum(
        concave_conjugate_at_gradient(v, np.maximum(x, _box_floor(v)))
        for v, x in zip(inst.valuations, record.allocations)
    )
    fstar, _ = conjugate_cost(f, record.prices[-1], cfg)
    return hinge - inner + fstar
