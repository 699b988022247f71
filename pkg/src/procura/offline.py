"""Offline optimum, a grid oracle for it, and the dual objective."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from ._boxsolve import spg_maximize
from .cost_model import (
    DEFAULT_CONFIG,
    CostFunction,
    SolverConfig,
    Valuation,
    concave_conjugate,
    conjugate_cost,
)
from .errors import DomainError

# lower bound used for concave power coordinates, whose gradient blows up at 0
_POWER_FLOOR = 1e-12

ENUMERATION_CAP = 20_000_000


@dataclass(frozen=True)
class Instance:
    """An ordered arrival sequence of T customers over D resources."""

    valuations: tuple[Valuation, ...]

    def __post_init__(self):
        vals = tuple(self.valuations)
        object.__setattr__(self, "valuations", vals)
        if not vals:
            raise ValueError("an instance needs at least one customer")
        D = vals[0].dimension
        if any(v.dimension != D for v in vals):
            raise ValueError("all valuations must share one dimension")

    @property
    def horizon(self) -> int:
        return len(self.valuations)

    @property
    def dimension(self) -> int:
        return self.valuations[0].dimension

    @property
    def all_linear(self) -> bool:
        return all(v.is_linear for v in self.valuations)

    def coef_matrix(self) -> np.ndarray:
        return np.array([v.c for v in self.valuations], dtype=float)

    def exponent_vector(self) -> np.ndarray:
        return np.array([v.p for v in self.valuations], dtype=float)

    def value(self, X) -> float:
        """``sum_t v_t(x_t)`` for a T x D allocation matrix."""
        X = np.clip(np.asarray(X, dtype=float), 0.0, 1.0)
        C, P = self.coef_matrix(), self.exponent_vector()
        return float(np.sum(C * X ** P[:, None]))

    def to_dict(self) -> dict:
        return {"D": self.dimension, "T": self.horizon, "valuations": [v.to_dict() for v in self.valuations]}

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        inst = cls(tuple(Valuation.from_dict(v) for v in data["valuations"]))
        if "T" in data and int(data["T"]) != inst.horizon:
            raise ValueError(f"instance declares T={data['T']} but lists {inst.horizon} valuations")
        if "D" in data and int(data["D"]) != inst.dimension:
            raise ValueError(f"instance declares D={data['D']} but valuations have dimension {inst.dimension}")
        return inst

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


@dataclass
class OfflineSolution:
    allocations: np.ndarray
    objective: float
    converged: bool = True
    iterations: int = 0
    proj_grad: float = 0.0
    method: str = "spg"
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        D = self.allocations.shape[1]
        w.writerow(["t"] + [f"x_{d + 1}" for d in range(D)])
        for t, row in enumerate(self.allocations, start=1):
            w.writerow([t] + [repr(float(x)) for x in row])
        return buf.getvalue()


def primal_objective(inst: Instance, f: CostFunction, X) -> float:
    """``sum_t v_t(x_t) - f(sum_t x_t)``."""
    X = np.asarray(X, dtype=float)
    return inst.value(X) - f(X.sum(axis=0))


def _lower_bounds(inst: Instance) -> np.ndarray:
    C, P = inst.coef_matrix(), inst.exponent_vector()
    return np.where((P[:, None] < 1.0) & (C > 0), _POWER_FLOOR, 0.0)


def solve_offline(inst: Instance, f: CostFunction, cfg: SolverConfig = DEFAULT_CONFIG) -> OfflineSolution:
    """Maximize ``sum_t v_t(x_t) - f(sum_t x_t)`` over the box ``[0,1]^{T x D}``.

    Spectral projected gradient from the all-zero allocation and from the
    allocation that takes every customer fully; the better result wins. On
    non-convergence the best iterate is returned with ``converged=False``.
    """
    T, D = inst.horizon, inst.dimension
    C, P = inst.coef_matrix(), inst.exponent_vector()
    lo = _lower_bounds(inst).ravel()
    hi = np.ones(T * D)
    power = P[:, None]

    def fun(z):
        X = z.reshape(T, D)
        return float(np.sum(C * X**power)) - f(X.sum(axis=0))

    def grad(z):
        X = z.reshape(T, D)
        with np.errstate(divide="ignore", invalid="ignore"):
            gv = np.where(C > 0, C * power * X ** (power - 1.0), 0.0)
        return (gv - f.gradient(X.sum(axis=0))[None, :]).ravel()

    best = None
    for start in (lo.copy(), np.full(T * D, 0.5), hi.copy()):
        res = spg_maximize(fun, grad, start, lo, hi, cfg.max_iters, cfg.grad_tol)
        if best is None or res.value > best.value + 1e-12 * (1 + abs(best.value)):
            best = res
    X = best.x.reshape(T, D)
    if not best.converged:
        warnings.warn(
            f"offline solve stopped after {best.iterations} iterations with projected gradient {best.proj_grad:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    # the run started at the zero allocation is monotone, so best.value >= 0
    return OfflineSolution(X, float(best.value), best.converged, best.iterations, best.proj_grad, "spg")


def _grid_levels(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"grid step must divide 1 evenly, got {step}")
    return np.linspace(0.0, 1.0, n + 1)


def brute_force_offline(
    inst: Instance,
    f: CostFunction,
    grid_step: float,
    method: str = "auto",
    cap: int = ENUMERATION_CAP,
) -> tuple[float, np.ndarray]:
    """Exact maximum of the offline objective over ``{0, h, ..., 1}^{T x D}``.

    ``enumerate`` visits every grid allocation. ``dp`` uses separability of the
    valuations: for each coordinate a knapsack recursion gives the best value
    of every total on the grid, and only the totals are then enumerated. Both
    maximize the same function over the same finite set. ``auto`` enumerates
    when the grid is within ``cap`` and falls back to ``dp`` otherwise.
    """
    levels = _grid_levels(grid_step)
    T, D = inst.horizon, inst.dimension
    L = levels.size
    n_full = float(L) ** (T * D)
    if method == "auto":
        method = "enumerate" if n_full <= cap else "dp"
    if method == "enumerate":
        if n_full > cap:
            raise ValueError(f"grid has {n_full:.3g} allocations, above the enumeration cap {cap}")
        best, flat = kernels.grid_enumerate(
            levels, np.ascontiguousarray(inst.coef_matrix()), inst.exponent_vector(), f.coefs, f.exponents
        )
        digits = np.unravel_index(int(flat), (L,) * (T * D))
        X = levels[np.array(digits)].reshape(T, D)
        return float(best), X
    if method != "dp":
        raise ValueError(f"unknown brute-force method {method!r}")
    return _brute_force_dp(inst, f, levels, cap)


def _brute_force_dp(inst: Instance, f: CostFunction, levels: np.ndarray, cap: int) -> tuple[float, np.ndarray]:
    T, D = inst.horizon, inst.dimension
    n = levels.size - 1
    K = T * n + 1
    if float(K) ** D > cap:
        raise ValueError(f"grid has {float(K) ** D:.3g} totals, above the enumeration cap {cap}")
    C, P = inst.coef_matrix(), inst.exponent_vector()
    best_by_total = np.empty((D, K))
    choice = np.zeros((D, T, K), dtype=np.int64)
    for d in range(D):
        table = np.full(K, -np.inf)
        table[0] = 0.0
        for t in range(T):
            gains = C[t, d] * levels ** P[t]
            nxt = np.full(K, -np.inf)
            for j in range(n + 1):
                cand = np.full(K, -np.inf)
                cand[j:] = table[: K - j] + gains[j]
                better = cand > nxt
                nxt[better] = cand[better]
                choice[d, t, better] = j
            table = nxt
        best_by_total[d] = table
    mesh = np.meshgrid(*[np.arange(K)] * D, indexing="ij")
    idx = np.stack([m.ravel() for m in mesh], axis=1)
    U = idx * (1.0 / n)
    vals = best_by_total[np.arange(D)[None, :], idx].sum(axis=1) - f(U)
    k = int(np.argmax(vals))
    X = np.zeros((T, D))
    for d in range(D):
        rem = int(idx[k, d])
        for t in range(T - 1, -1, -1):
            j = int(choice[d, t, rem])
            X[t, d] = levels[j]
            rem -= j
    return float(vals[k]), X


def dual_objective(
    inst: Instance,
    f: CostFunction,
    lam,
    zs,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> float:
    """``sum_t sum_d max(z_td - lam_d, 0) - sum_t v_t*(z_t) + f*(lam)``.

    The concave conjugates are evaluated in closed form, so any ``z_t >= 0``
    is accepted; a ``z_t`` outside the conjugate's domain makes the value +inf.
    """
    lam = np.asarray(lam, dtype=float).reshape(-1)
    Z = np.atleast_2d(np.asarray(zs, dtype=float))
    if Z.shape != (inst.horizon, inst.dimension):
        raise ValueError(f"expected {inst.horizon} dual vectors of dimension {inst.dimension}")
    if np.any(lam < 0) or np.any(Z < 0):
        raise DomainError("dual variables must be nonnegative")
    hinge = float(np.maximum(Z - lam[None, :], 0.0).sum())
    inner = sum(concave_conjugate(v, z) for v, z in zip(inst.valuations, Z))
    if inner == -math.inf:
        return math.inf
    fstar, _ = conjugate_cost(f, lam, cfg)
    return hinge - inner + fstar


def instance_from_coefficients(coefs: Sequence[Sequence[float]], p: float = 1.0) -> Instance:
    """Convenience constructor: one valuation per row of ``coefs``."""
    return Instance(tuple(Valuation(tuple(np.atleast_1d(row)), p) for row in coefs))
