"""Procurement costs, surrogates and customer valuations.

A procurement cost is a positive sum of monomials ``c * prod_i u_i**tau_i`` on
the nonnegative orthant. Terms are grouped into basis components so that a
weighted surrogate can rescale each component separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ConjugateInfiniteError, ConvergenceError, DomainError
from .grid import GridSpec, Variant

_BOUND_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets shared by every iterative routine."""

    max_iters: int = 5000
    step_init: float = 1.0
    grad_tol: float = 1e-9
    feas_tol: float = 1e-6
    denom_tol: float = 1e-12
    seed: int = 0
    value_cap: float = 1e12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        for name in ("step_init", "grad_tol", "feas_tol", "denom_tol", "value_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict | None) -> "SolverConfig":
        return cls(**(data or {}))

    def to_dict(self) -> dict:
        return {
            "max_iters": self.max_iters,
            "step_init": self.step_init,
            "grad_tol": self.grad_tol,
            "feas_tol": self.feas_tol,
            "denom_tol": self.denom_tol,
            "seed": self.seed,
            "value_cap": self.value_cap,
        }


DEFAULT_CONFIG = SolverConfig()


# --------------------------------------------------------------------------
# cost functions


@dataclass(frozen=True)
class MonomialTerm:
    coefficient: float
    exponents: tuple[float, ...]

    def __post_init__(self):
        exps = tuple(float(e) for e in self.exponents)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficient", float(self.coefficient))
        if not self.coefficient > 0:
            raise ValueError(f"monomial coefficient must be positive, got {self.coefficient}")
        if any(e < 0 or not math.isfinite(e) for e in exps):
            raise ValueError(f"monomial exponents must be finite and nonnegative, got {exps}")

    @property
    def degree(self) -> float:
        return float(sum(self.exponents))

    @property
    def dimension(self) -> int:
        return len(self.exponents)


@dataclass(frozen=True, eq=False)
class CostFunction:
    """Positive monomial sum ``f(u) = sum_k c_k prod_i u_i**tau_ki``.

    ``basis`` groups term indices into the components g_1..g_N; by default
    every term is its own component.
    """

    dimension: int
    terms: tuple[MonomialTerm, ...]
    basis: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if not terms:
            raise ValueError("a cost function needs at least one term")
        for t in terms:
            if t.dimension != self.dimension:
                raise ValueError(
                    f"term has {t.dimension} exponents but the cost has dimension {self.dimension}"
                )
            if not t.degree > 0:
                raise ValueError("every term must have positive degree so that f(0) = 0")
        basis = tuple(tuple(int(i) for i in g) for g in self.basis) or tuple(
            (k,) for k in range(len(terms))
        )
        flat = sorted(i for g in basis for i in g)
        if flat != list(range(len(terms))):
            raise ValueError("basis must partition the term indices")
        if any(not g for g in basis):
            raise ValueError("basis components must be nonempty")
        object.__setattr__(self, "basis", basis)

    # constructors -------------------------------------------------------

    @classmethod
    def from_terms(cls, terms: Iterable, basis=None) -> "CostFunction":
        """Build from ``(coef, exponents)`` pairs or MonomialTerm instances."""
        built = [t if isinstance(t, MonomialTerm) else MonomialTerm(t[0], tuple(t[1])) for t in terms]
        return cls(dimension=built[0].dimension, terms=tuple(built), basis=tuple(basis or ()))

    @classmethod
    def monomial(cls, coef: float, exponents: Sequence[float]) -> "CostFunction":
        return cls.from_terms([(coef, exponents)])

    @classmethod
    def power_of_sum(cls, weights: Sequence[float], power: int, coef: float = 1.0) -> "CostFunction":
        """Expand ``coef * (w . u)**power`` into monomials (integer power).

        Coordinates with zero weight are dropped from the expansion.
        """
        if int(power) != power or power < 1:
            raise ValueError("power_of_sum needs a positive integer power")
        power = int(power)
        D = len(weights)
        acc: dict[tuple[int, ...], float] = {}
        for combo in product(range(D), repeat=power):
            key = tuple(combo.count(i) for i in range(D))
            acc[key] = acc.get(key, 0.0) + float(np.prod([weights[i] for i in combo]))
        terms = [(coef * c, tuple(float(e) for e in k)) for k, c in sorted(acc.items(), reverse=True) if c > 0]
        return cls.from_terms(terms)

    @classmethod
    def sum_of(cls, components: Sequence["CostFunction"]) -> "CostFunction":
        """Concatenate costs, each becoming one basis component."""
        terms: list[MonomialTerm] = []
        basis = []
        for comp in components:
            idx = tuple(range(len(terms), len(terms) + len(comp.terms)))
            terms.extend(comp.terms)
            basis.append(idx)
        return cls(dimension=components[0].dimension, terms=tuple(terms), basis=tuple(basis))

    # array views ---------------------------------------------------------

    @cached_property
    def coefs(self) -> np.ndarray:
        arr = np.array([t.coefficient for t in self.terms])
        arr.flags.writeable = False
        return arr

    @cached_property
    def exponents(self) -> np.ndarray:
        arr = np.array([t.exponents for t in self.terms], dtype=float).reshape(len(self.terms), self.dimension)
        arr.flags.writeable = False
        return arr

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    @property
    def max_degree(self) -> float:
        return float(self.degrees.max())

    @property
    def min_degree(self) -> float:
        return float(self.degrees.min())

    @property
    def n_components(self) -> int:
        return len(self.basis)

    def component(self, n: int) -> "CostFunction":
        return CostFunction(self.dimension, tuple(self.terms[k] for k in self.basis[n]))

    def components(self) -> list["CostFunction"]:
        return [self.component(n) for n in range(self.n_components)]

    @cached_property
    def is_coercive(self) -> bool:
        """Every coordinate carries a term supported on it alone with degree > 1.

        For positive monomial sums this is exactly the condition that f grows
        superlinearly along every ray of the orthant, so f* is finite.
        """
        E = self.exponents
        for d in range(self.dimension):
            others = np.delete(E, d, axis=1)
            pure = (others == 0).all(axis=1) & (E[:, d] > 1.0)
            if not pure.any():
                return False
        return True

    # transforms ----------------------------------------------------------

    def rescaled(self, factors: Sequence[float]) -> "CostFunction":
        """Multiply term k's coefficient by ``factors[k]`` keeping the basis."""
        terms = tuple(
            MonomialTerm(t.coefficient * float(s), t.exponents) for t, s in zip(self.terms, factors)
        )
        return CostFunction(self.dimension, terms, self.basis)

    # evaluation ----------------------------------------------------------

    def _batch(self, u) -> tuple[np.ndarray, bool]:
        U = np.asarray(u, dtype=float)
        single = U.ndim == 1
        U = np.atleast_2d(U)
        if U.shape[-1] != self.dimension:
            raise ValueError(f"expected points of dimension {self.dimension}, got {U.shape[-1]}")
        if np.any(U < 0) or not np.all(np.isfinite(U)):
            raise DomainError("cost functions are defined on the nonnegative orthant only")
        return np.ascontiguousarray(U), single

    def __call__(self, u):
        U, single = self._batch(u)
        out = kernels.mono_eval(self.coefs, self.exponents, U)
        return float(out[0]) if single else out

    def gradient(self, u) -> np.ndarray:
        U, single = self._batch(u)
        G = kernels.mono_grad(self.coefs, self.exponents, U)
        if not np.all(np.isfinite(G)):
            raise DomainError("gradient is unbounded here (fractional exponent at a zero coordinate)")
        return G[0] if single else G

    def hessian(self, u) -> np.ndarray:
        U, single = self._batch(u)
        H = kernels.mono_hess(self.coefs, self.exponents, U)
        return H[0] if single else H

    # serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "terms": [{"coef": t.coefficient, "exponents": list(t.exponents)} for t in self.terms],
            "basis": [list(g) for g in self.basis],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CostFunction":
        terms = tuple(MonomialTerm(t["coef"], tuple(t["exponents"])) for t in data["terms"])
        dim = int(data.get("dimension", terms[0].dimension))
        basis = tuple(tuple(g) for g in data.get("basis") or ())
        return cls(dim, terms, basis)

    def __eq__(self, other):
        if not isinstance(other, CostFunction):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.dimension, self.terms, self.basis))

    def __repr__(self):
        parts = []
        for t in self.terms:
            mono = "*".join(
                f"u{i + 1}" if e == 1 else f"u{i + 1}^{e:g}" for i, e in enumerate(t.exponents) if e
            )
            parts.append(f"{t.coefficient:g}*{mono}")
        return f"CostFunction({' + '.join(parts)})"


def eval_cost(f: CostFunction, u) -> float:
    """``f(u)`` for a single point (0**0 is taken as 1)."""
    return f(np.asarray(u, dtype=float).reshape(-1))


def grad_cost(f: CostFunction, u) -> np.ndarray:
    return f.gradient(np.asarray(u, dtype=float).reshape(-1))


# --------------------------------------------------------------------------
# convex conjugate


@dataclass(frozen=True)
class ConjugateResult:
    values: np.ndarray
    maximizers: np.ndarray
    status: np.ndarray
    iterations: np.ndarray

    @property
    def converged(self) -> np.ndarray:
        return self.status == kernels.CONVERGED


def _stationary_start(f: CostFunction, L: np.ndarray) -> np.ndarray:
    # per coordinate: zero the derivative of the highest-degree pure power
    E = f.exponents
    W = np.ones_like(L)
    for d in range(f.dimension):
        others = np.delete(E, d, axis=1)
        pure = np.nonzero((others == 0).all(axis=1) & (E[:, d] > 1.0))[0]
        if pure.size == 0:
            continue
        k = pure[np.argmax(E[pure, d])]
        p, c = E[k, d], f.coefs[k]
        W[:, d] = (np.maximum(L[:, d], 0.0) / (c * p)) ** (1.0 / (p - 1.0))
    return W


def conjugate_cost_batch(
    f: CostFunction,
    lams,
    cfg: SolverConfig = DEFAULT_CONFIG,
    starts: np.ndarray | None = None,
    strict: bool = False,
) -> ConjugateResult:
    """``f*(lam) = sup_{w >= 0} lam.w - f(w)`` for every row of ``lams``.

    Uses projected Newton with Armijo backtracking from the all-ones point and
    from the dominant-term stationary point, keeping the better of the two.
    ``starts`` (S, M, D) replaces those default starting points.
    """
    L = np.ascontiguousarray(np.atleast_2d(np.asarray(lams, dtype=float)))
    if L.shape[1] != f.dimension:
        raise ValueError(f"expected multipliers of dimension {f.dimension}")
    if np.any(L < 0):
        raise DomainError("conjugate multipliers must be nonnegative")
    if starts is None:
        starts = np.stack([np.ones_like(L), _stationary_start(f, L)])
    starts = np.ascontiguousarray(starts, dtype=float)
    vals, W, status, iters = kernels.conjugate_batch(
        f.coefs, f.exponents, L, starts, cfg.max_iters, cfg.grad_tol, cfg.value_cap
    )
    if np.any(status == kernels.DIVERGED) or np.any(vals > cfg.value_cap):
        bad = np.nonzero((status == kernels.DIVERGED) | (vals > cfg.value_cap))[0][0]
        hint = "" if f.is_coercive else " (the cost is not superlinear along every axis)"
        raise ConjugateInfiniteError(f"conjugate infinite at multiplier {L[bad].tolist()}{hint}")
    if strict and np.any(status == kernels.MAX_ITERS):
        raise ConvergenceError(f"conjugate solve did not converge within {cfg.max_iters} iterations")
    # w = 0 is always feasible, so f* >= f(0) - 0 = 0
    neg = vals < 0
    if np.any(neg):
        vals = np.where(neg, 0.0, vals)
        W[neg] = 0.0
    return ConjugateResult(vals, W, status, iters)


def conjugate_cost(f: CostFunction, lam, cfg: SolverConfig = DEFAULT_CONFIG) -> tuple[float, np.ndarray]:
    """Return ``(f*(lam), argmax)``; raises when the supremum is unbounded."""
    res = conjugate_cost_batch(f, np.asarray(lam, dtype=float).reshape(1, -1), cfg, strict=True)
    return float(res.values[0]), res.maximizers[0]


# --------------------------------------------------------------------------
# surrogates


@dataclass(frozen=True)
class SurrogateSpec:
    """A surrogate built from ``base``.

    ``scaled``: f_s(u) = f(rho u) / rho.  ``weighted``: f_s = sum_n a_n g_n.
    ``identity``: f_s = f.
    """

    base: CostFunction
    mode: str = "identity"
    rho: float | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mode == "scaled":
            if self.rho is None or not self.rho > 1:
                raise ValueError(f"scaled surrogate needs rho > 1, got {self.rho}")
        elif self.mode == "weighted":
            if self.weights is None or len(self.weights) != self.base.n_components:
                raise ValueError("weighted surrogate needs one weight per basis component")
            w = tuple(float(a) for a in self.weights)
            if any(not a >= 1.0 for a in w):
                raise ValueError(f"surrogate weights must satisfy a >= 1, got {w}")
            object.__setattr__(self, "weights", w)
        elif self.mode != "identity":
            raise ValueError(f"unknown surrogate mode {self.mode!r}")

    @classmethod
    def identity(cls, base: CostFunction) -> "SurrogateSpec":
        return cls(base)

    @classmethod
    def scaled(cls, base: CostFunction, rho: float) -> "SurrogateSpec":
        return cls(base, "scaled", rho=float(rho))

    @classmethod
    def weighted(cls, base: CostFunction, weights: Sequence[float]) -> "SurrogateSpec":
        return cls(base, "weighted", weights=tuple(weights))

    def term_factors(self) -> np.ndarray:
        f = self.base
        if self.mode == "scaled":
            return self.rho ** (f.degrees - 1.0)
        factors = np.ones(len(f.terms))
        if self.mode == "weighted":
            for a, group in zip(self.weights, f.basis):
                factors[list(group)] = a
        return factors

    def expand(self) -> CostFunction:
        return self.base.rescaled(self.term_factors())

    def to_dict(self) -> dict:
        out: dict = {"mode": self.mode}
        if self.mode == "scaled":
            out["rho"] = self.rho
        if self.mode == "weighted":
            out["weights"] = list(self.weights)
        out["base"] = self.base.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SurrogateSpec":
        weights = data.get("weights")
        return cls(
            CostFunction.from_dict(data["base"]),
            data.get("mode", "identity"),
            rho=data.get("rho"),
            weights=tuple(weights) if weights is not None else None,
        )


# --------------------------------------------------------------------------
# valuations


@dataclass(frozen=True)
class Valuation:
    """Separable customer valuation ``v(x) = sum_d c_d x_d**p``.

    ``p == 1`` is the linear valuation; ``0 < p < 1`` the concave power family.
    """

    c: tuple[float, ...]
    p: float = 1.0

    def __post_init__(self):
        c = tuple(float(x) for x in self.c)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "p", float(self.p))
        if not c:
            raise ValueError("valuation needs at least one coefficient")
        if any(x < 0 or not math.isfinite(x) for x in c):
            raise ValueError("valuation coefficients must be finite and nonnegative")
        if not 0 < self.p <= 1:
            raise ValueError(f"valuation exponent must lie in (0, 1], got {self.p}")

    @classmethod
    def linear(cls, c: Sequence[float]) -> "Valuation":
        return cls(tuple(c), 1.0)

    @classmethod
    def concave_power(cls, c: Sequence[float], p: float) -> "Valuation":
        return cls(tuple(c), p)

    @property
    def kind(self) -> str:
        return "linear" if self.p == 1.0 else "concave_power"

    @property
    def is_linear(self) -> bool:
        return self.p == 1.0

    @property
    def dimension(self) -> int:
        return len(self.c)

    @cached_property
    def coef_array(self) -> np.ndarray:
        arr = np.array(self.c)
        arr.flags.writeable = False
        return arr

    def to_dict(self) -> dict:
        if self.is_linear:
            return {"kind": "linear", "c": list(self.c)}
        return {"kind": "concave_power", "c": list(self.c), "p": self.p}

    @classmethod
    def from_dict(cls, data: dict) -> "Valuation":
        kind = data.get("kind", "linear")
        if kind == "linear":
            return cls.linear(data["c"])
        if kind == "concave_power":
            return cls.concave_power(data["c"], data["p"])
        raise ValueError(f"unknown valuation kind {kind!r}")


def _check_box(v: Valuation, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != v.dimension:
        raise ValueError(f"expected an allocation of dimension {v.dimension}, got {x.size}")
    if np.any(x < -_BOUND_TOL) or np.any(x > 1 + _BOUND_TOL):
        raise DomainError("allocations must lie in [0, 1]^D")
    return np.clip(x, 0.0, 1.0)


def eval_valuation(v: Valuation, x) -> float:
    x = _check_box(v, x)
    return float(np.dot(v.coef_array, x**v.p))


def grad_valuation(v: Valuation, x) -> np.ndarray:
    x = _check_box(v, x)
    c = v.coef_array
    if v.is_linear:
        return c.copy()
    if np.any((x == 0) & (c > 0)):
        raise DomainError("concave power valuation has an unbounded gradient at x_d = 0")
    with np.errstate(divide="ignore"):
        return np.where(c > 0, c * v.p * x ** (v.p - 1.0), 0.0)


def concave_conjugate_at_gradient(v: Valuation, x) -> float:
    """``v_*(grad v(x)) = grad v(x).x - v(x)`` (Fenchel-Young equality)."""
    z = grad_valuation(v, x)
    return float(np.dot(z, _check_box(v, x)) - eval_valuation(v, x))


def concave_conjugate(v: Valuation, z) -> float:
    """``v_*(z) = inf_{u >= 0} z.u - v(u)`` in closed form; may be ``-inf``."""
    z = np.asarray(z, dtype=float).reshape(-1)
    c = v.coef_array
    if v.is_linear:
        return 0.0 if np.all(z >= c) else -math.inf
    total = 0.0
    for zd, cd in zip(z, c):
        if cd == 0:
            continue
        if zd <= 0:
            return -math.inf
        u = (cd * v.p / zd) ** (1.0 / (1.0 - v.p))
        total -= zd * u * (1.0 - v.p) / v.p
    return total


# --------------------------------------------------------------------------
# assumption checks


@dataclass
class ValidationReport:
    variant: Variant
    clauses: dict[str, bool]
    details: dict[str, str]
    warnings: list[str]

    @property
    def ok(self) -> bool:
        return all(self.clauses.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.clauses.items() if not v]


def _axis_pairs(grid: GridSpec):
    """Index pairs (lo, hi) of neighbouring grid points along every axis."""
    counts = grid.counts
    idx = np.arange(grid.n_points).reshape(counts)
    for d in range(grid.dimension):
        lo = np.take(idx, np.arange(counts[d] - 1), axis=d).ravel()
        hi = np.take(idx, np.arange(1, counts[d]), axis=d).ravel()
        yield lo, hi


def validate_assumptions(
    f: CostFunction,
    fs: SurrogateSpec,
    horizon: int,
    variant=Variant.SIM,
    grid: GridSpec | None = None,
    cfg: SolverConfig = DEFAULT_CONFIG,
    n_samples: int = 200,
) -> ValidationReport:
    """Numerically check the standing assumptions on f and the surrogate.

    Monotonicity of values and gradients is checked between neighbouring grid
    points (sufficient by transitivity); convexity by random segment midpoints.
    Failures are report content, never exceptions.
    """
    variant = Variant.parse(variant)
    if grid is None:
        grid = GridSpec.for_variant(variant, horizon, f.dimension, step=1.0 if horizon > 50 else 0.1)
    g_expanded = fs.expand()
    U = grid.points()
    clauses: dict[str, bool] = {}
    details: dict[str, str] = {}
    warnings: list[str] = []
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.feas_tol

    for label, h in (("f", f), ("fs", g_expanded)):
        vals = h(U)
        scale = 1.0 + np.abs(vals).max()
        clauses[f"{label}_zero_at_origin"] = abs(h(np.zeros(f.dimension))) <= tol
        inc = all(np.all(vals[hi] >= vals[lo] - tol * scale) for lo, hi in _axis_pairs(grid))
        clauses[f"{label}_increasing"] = bool(inc)
        try:
            G = h.gradient(U)
            gscale = 1.0 + np.abs(G).max()
            ginc = all(np.all(G[hi] >= G[lo] - tol * gscale) for lo, hi in _axis_pairs(grid))
            clauses[f"{label}_gradient_increasing"] = bool(ginc)
        except DomainError as exc:
            clauses[f"{label}_gradient_increasing"] = False
            details[f"{label}_gradient_increasing"] = str(exc)
        top = np.array(grid.upper)
        A = rng.uniform(0, 1, (n_samples, f.dimension)) * top
        B = rng.uniform(0, 1, (n_samples, f.dimension)) * top
        mid = h(0.5 * (A + B))
        chord = 0.5 * (h(A) + h(B))
        clauses[f"{label}_convex"] = bool(np.all(mid <= chord + tol * (1.0 + np.abs(chord))))

    # dominance on [0, T] (simultaneous / offset 0) or [0, T-1] (offset 1)
    gap = g_expanded(U) - f(U)
    scale = 1.0 + np.abs(f(U)).max()
    clauses["fs_dominates_f"] = bool(np.all(gap >= -tol * scale))
    if np.all(np.abs(gap) <= tol * scale):
        warnings.append("surrogate equals the cost on the grid: the ratio bound is infinite")
    if variant is Variant.SEQ1:
        ok = all(np.all(gap[hi] >= gap[lo] - tol * scale) for lo, hi in _axis_pairs(grid))
        clauses["fs_minus_f_increasing"] = bool(ok)
    return ValidationReport(variant, clauses, details, warnings)
