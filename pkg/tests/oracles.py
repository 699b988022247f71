"""Independent reference computations used to check the package.

Nothing here imports the solvers under test; each oracle is a slow, direct
evaluation of the defining formula.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import minimize, minimize_scalar


def poly_eval(terms, u):
    """Sum of ``c * prod u_i**e_i`` written out term by term (0**0 = 1)."""
    total = 0.0
    for c, exps in terms:
        p = c
        for ui, e in zip(u, exps):
            p *= 1.0 if e == 0 else ui**e
        total += p
    return total


def central_diff(fun, u, h=1e-6):
    u = np.asarray(u, dtype=float)
    g = np.zeros_like(u)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (fun(u + e) - fun(u - e)) / (2 * h)
    return g


def conjugate_grid(fun, lam, upper, step):
    """``max_w lam.w - f(w)`` over a uniform box grid."""
    axes = [np.arange(0.0, upper + step / 2, step)] * len(lam)
    best = -math.inf
    for w in itertools.product(*axes):
        w = np.array(w)
        best = max(best, float(np.dot(lam, w) - fun(w)))
    return best


def conjugate_scipy(fun, lam, x0):
    """``sup_{w >= 0} lam.w - f(w)`` via bounded L-BFGS-B from several starts."""
    lam = np.asarray(lam, dtype=float)
    best = 0.0  # w = 0
    for start in (np.asarray(x0, dtype=float), np.ones_like(lam), 3 * np.ones_like(lam)):
        res = minimize(
            lambda w: fun(w) - lam @ w,
            start,
            method="L-BFGS-B",
            bounds=[(0, None)] * lam.size,
            options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10000},
        )
        best = max(best, -float(res.fun))
    return best


def concave_conjugate_numeric(c, p, z, upper=50.0):
    """``inf_{u >= 0} z u - c u**p`` for one coordinate by bounded search."""
    res = minimize_scalar(lambda u: z * u - c * u**p, bounds=(0.0, upper), method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, 0.0))


def rho_objective_scan(tau, lo=1.0 + 1e-6, hi=10.0, n=200001):
    rho = np.linspace(lo, hi, n)
    vals = (tau - 1) * rho**tau / (rho ** (tau - 1) - 1)
    k = int(np.argmin(vals))
    return float(rho[k]), float(vals[k])


def simulate_posted_prices(c, fs_grad, offset):
    """Hand-rolled scalar posted-price engine: x_t = 1 iff c_t >= price."""
    S = 0.0
    xs, prices = [], []
    for ct in c:
        lam = fs_grad(S + offset)
        x = 1.0 if (ct >= lam and ct > 0) else 0.0
        prices.append(lam)
        xs.append(x)
        S += x
    return xs, prices


def enumerate_offline(C, cost, step):
    """Pure-python exhaustive search of ``sum c_td x_td - f(sum_t x_t)``."""
    C = np.asarray(C, dtype=float)
    T, D = C.shape
    levels = np.arange(0.0, 1.0 + step / 2, step)
    best, arg = -math.inf, None
    for flat in itertools.product(levels, repeat=T * D):
        X = np.array(flat).reshape(T, D)
        val = float((C * X).sum() - cost(X.sum(axis=0)))
        if val > best:
            best, arg = val, X
    return best, arg


def alpha_quadratic_sim(a):
    """Ratio for f = u^2, f_s = a u^2: f*(2au) / ((a-1)u^2) = a^2 / (a - 1)."""
    return a * a / (a - 1.0)
