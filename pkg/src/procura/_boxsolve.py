"""Box-constrained maximizers shared by the offline and online solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_ARMIJO = 1e-4
_MAX_BACKTRACK = 60


@dataclass
class BoxResult:
    x: np.ndarray
    value: float
    converged: bool
    iterations: int
    proj_grad: float


def projected_gradient_norm(x, g, lo, hi) -> float:
    return float(np.max(np.abs(np.clip(x + g, lo, hi) - x), initial=0.0))


def spg_maximize(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    max_iters: int,
    tol: float,
    memory: int = 10,
) -> BoxResult:
    """Spectral projected gradient ascent with a nonmonotone Armijo search.

    Stops when the projected gradient ``clip(x + g) - x`` is below
    ``tol * (1 + |g|_inf)`` in the max norm.
    """
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    val = fun(x)
    g = grad(x)
    history = [val]
    pg = projected_gradient_norm(x, g, lo, hi)
    step = 1.0 / max(pg, 1e-12)
    best_x, best_val = x.copy(), val
    it = 0
    while it < max_iters:
        if pg <= tol * (1.0 + np.max(np.abs(g), initial=0.0)):
            return BoxResult(best_x if best_val > val else x, max(val, best_val), True, it, pg)
        d = np.clip(x + step * g, lo, hi) - x
        slope = float(g @ d)
        ref = min(history[-memory:])
        t = 1.0
        for _ in range(_MAX_BACKTRACK):
            cand = x + t * d
            cval = fun(cand)
            if cval >= ref + _ARMIJO * t * slope:
                break
            t *= 0.5
        else:
            # no ascent along the projected arc: stationary to working precision
            return BoxResult(x, val, False, it, pg)
        it += 1
        gnew = grad(cand)
        s = cand - x
        y = gnew - g
        curv = -float(s @ y)
        step = float(s @ s) / curv if curv > 0 else 1e10
        step = min(max(step, 1e-10), 1e10)
        x, val, g = cand, cval, gnew
        history.append(val)
        if val > best_val:
            best_x, best_val = x.copy(), val
        pg = projected_gradient_norm(x, g, lo, hi)
    return BoxResult(best_x, best_val, False, it, pg)


def newton_maximize(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    hess: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    max_iters: int,
    tol: float,
) -> BoxResult:
    """Projected Newton ascent on a concave function over a small box.

    Coordinates sitting on a bound with the gradient pointing outward are held
    fixed; the rest take a regularized Newton step, falling back to the
    gradient when the Newton direction fails the Armijo test.
    """
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    val = fun(x)
    force_grad = False
    it = 0
    pg = np.inf
    while it < max_iters:
        g = grad(x)
        pg = projected_gradient_norm(x, g, lo, hi)
        if pg <= tol * (1.0 + np.max(np.abs(g), initial=0.0)):
            return BoxResult(x, val, True, it, pg)
        bound = ((x <= lo) & (g < 0)) | ((x >= hi) & (g > 0))
        rhs = np.where(bound, 0.0, g)
        d = rhs
        newton = False
        if not force_grad:
            H = -np.asarray(hess(x), dtype=float)
            H[bound, :] = 0.0
            H[:, bound] = 0.0
            H[bound, bound] = 1.0
            if np.all(np.isfinite(H)):
                H[np.diag_indices_from(H)] += 1e-12 * (1.0 + np.abs(np.diag(H)).max())
                try:
                    dn = np.linalg.solve(H, rhs)
                    if np.all(np.isfinite(dn)) and dn @ rhs > 0:
                        d, newton = dn, True
                except np.linalg.LinAlgError:
                    pass
        t = 1.0
        accepted = False
        for _ in range(_MAX_BACKTRACK):
            cand = np.clip(x + t * d, lo, hi)
            cval = fun(cand)
            if cval >= val + _ARMIJO * float(g @ (cand - x)):
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            if newton:
                force_grad = True
                continue
            return BoxResult(x, val, False, it, pg)
        force_grad = False
        x, val = cand, cval
    return BoxResult(x, val, False, it, pg)
