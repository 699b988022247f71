"""numba-compiled twins of the kernels in ``_numpy``."""

import numpy as np
from numba import njit

CONVERGED = 0
MAX_ITERS = 1
DIVERGED = 2
STALLED = 3

_ARMIJO = 1e-4
_RESOLUTION = 1e-13
_MAX_BACKTRACK = 60


@njit(cache=True)
def _eval_point(coefs, expo, u):
    K, D = expo.shape
    total = 0.0
    for k in range(K):
        p = coefs[k]
        for i in range(D):
            e = expo[k, i]
            if e != 0.0:
                p *= u[i] ** e
        total += p
    return total


@njit(cache=True)
def _grad_point(coefs, expo, u, out):
    K, D = expo.shape
    for i in range(D):
        out[i] = 0.0
    for k in range(K):
        for i in range(D):
            ei = expo[k, i]
            if ei == 0.0:
                continue
            p = coefs[k] * ei
            for j in range(D):
                e = expo[k, j] - 1.0 if j == i else expo[k, j]
                if e != 0.0:
                    p *= u[j] ** e
            out[i] += p


@njit(cache=True)
def _hess_point(coefs, expo, u, out):
    K, D = expo.shape
    for i in range(D):
        for j in range(D):
            out[i, j] = 0.0
    for k in range(K):
        for i in range(D):
            for j in range(i, D):
                if i == j:
                    fac = expo[k, i] * (expo[k, i] - 1.0)
                else:
                    fac = expo[k, i] * expo[k, j]
                if fac == 0.0:
                    continue
                p = coefs[k] * fac
                for m in range(D):
                    e = expo[k, m]
                    if m == i:
                        e -= 1.0
                    if m == j:
                        e -= 1.0
                    if e != 0.0:
                        p *= u[m] ** e
                out[i, j] += p
    for i in range(D):
        for j in range(i + 1, D):
            out[j, i] = out[i, j]


@njit(cache=True)
def mono_eval(coefs, expo, U):
    M = U.shape[0]
    out = np.empty(M)
    for m in range(M):
        out[m] = _eval_point(coefs, expo, U[m])
    return out


@njit(cache=True)
def mono_grad(coefs, expo, U):
    M, D = U.shape
    out = np.empty((M, D))
    for m in range(M):
        _grad_point(coefs, expo, U[m], out[m])
    return out


@njit(cache=True)
def mono_hess(coefs, expo, U):
    M, D = U.shape
    out = np.empty((M, D, D))
    for m in range(M):
        _hess_point(coefs, expo, U[m], out[m])
    return out


@njit(cache=True)
def _solve_inplace(A, b):
    """Gaussian elimination with partial pivoting; False if singular."""
    n = b.size
    for c in range(n):
        piv = c
        best = abs(A[c, c])
        for r in range(c + 1, n):
            if abs(A[r, c]) > best:
                best = abs(A[r, c])
                piv = r
        if best == 0.0 or not np.isfinite(best):
            return False
        if piv != c:
            for k in range(n):
                tmp = A[c, k]
                A[c, k] = A[piv, k]
                A[piv, k] = tmp
            tmp = b[c]
            b[c] = b[piv]
            b[piv] = tmp
        for r in range(c + 1, n):
            fac = A[r, c] / A[c, c]
            for k in range(c, n):
                A[r, k] -= fac * A[c, k]
            b[r] -= fac * b[c]
    for c in range(n - 1, -1, -1):
        s = b[c]
        for k in range(c + 1, n):
            s -= A[c, k] * b[k]
        b[c] = s / A[c, c]
    return True


@njit(cache=True)
def _newton_point(coefs, expo, lam, w0, max_iters, tol, cap):
    D = lam.size
    w = w0.copy()
    grad = np.empty(D)
    g = np.empty(D)
    rhs = np.empty(D)
    d = np.empty(D)
    cand = np.empty(D)
    H = np.empty((D, D))
    bound = np.zeros(D, dtype=np.bool_)
    scale = 1.0
    for i in range(D):
        scale = max(scale, 1.0 + abs(lam[i]))
    force_grad = False
    status = MAX_ITERS
    it = 0
    while it < max_iters:
        _grad_point(coefs, expo, w, grad)
        pg = 0.0
        for i in range(D):
            g[i] = lam[i] - grad[i]
            bound[i] = w[i] <= 0.0 and g[i] <= 0.0
            rhs[i] = 0.0 if bound[i] else g[i]
            pg = max(pg, abs(rhs[i]))
        if pg <= tol * scale:
            status = CONVERGED
            break

        newton = False
        if not force_grad:
            _hess_point(coefs, expo, w, H)
            dmax = 0.0
            finite = True
            for i in range(D):
                for j in range(D):
                    if bound[i] or bound[j]:
                        H[i, j] = 1.0 if i == j else 0.0
                    if not np.isfinite(H[i, j]):
                        finite = False
                dmax = max(dmax, abs(H[i, i]))
            if finite:
                reg = 1e-12 * (1.0 + dmax)
                for i in range(D):
                    H[i, i] += reg
                    d[i] = rhs[i]
                if _solve_inplace(H, d):
                    slope = 0.0
                    ok = True
                    for i in range(D):
                        if not np.isfinite(d[i]):
                            ok = False
                        slope += d[i] * rhs[i]
                    newton = ok and slope > 0.0
        if not newton:
            for i in range(D):
                d[i] = rhs[i]

        phi0 = -_eval_point(coefs, expo, w)
        for i in range(D):
            phi0 += lam[i] * w[i]
        t = 1.0
        accepted = False
        for _ in range(_MAX_BACKTRACK):
            lin = 0.0
            phin = 0.0
            for i in range(D):
                cand[i] = max(w[i] + t * d[i], 0.0)
                lin += g[i] * (cand[i] - w[i])
                phin += lam[i] * cand[i]
            phin -= _eval_point(coefs, expo, cand)
            if phin >= phi0 + _ARMIJO * lin:
                accepted = True
                break
            # a full newton step whose change is below the rounding level of phi is taken as is
            if newton and t == 1.0 and phin >= phi0 - _RESOLUTION * (1.0 + abs(phi0)):
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            if newton:
                force_grad = True
                continue
            status = STALLED
            break
        force_grad = False
        diverged = False
        for i in range(D):
            w[i] = cand[i]
            if not (w[i] <= cap):
                diverged = True
        if diverged:
            status = DIVERGED
            break
    value = -_eval_point(coefs, expo, w)
    for i in range(D):
        value += lam[i] * w[i]
    return value, w, status, it


@njit(cache=True)
def conjugate_batch(coefs, expo, lam, starts, max_iters, tol, cap):
    S, M, D = starts.shape
    values = np.empty(M)
    W = np.empty((M, D))
    status = np.empty(M, dtype=np.int64)
    iters = np.empty(M, dtype=np.int64)
    for m in range(M):
        for s in range(S):
            v, w, st, it = _newton_point(coefs, expo, lam[m], starts[s, m], max_iters, tol, cap)
            take = s == 0
            if not take:
                if st == DIVERGED and status[m] != DIVERGED:
                    take = True
                elif st != DIVERGED and status[m] != DIVERGED and v > values[m]:
                    take = True
            if take:
                values[m] = v
                W[m] = w
                status[m] = st
                iters[m] = it
    return values, W, status, iters


@njit(cache=True)
def grid_enumerate(levels, val_c, val_p, coefs, expo):
    T, D = val_c.shape
    n = T * D
    L = levels.size
    digits = np.zeros(n, dtype=np.int64)
    total = 1
    for _ in range(n):
        total *= L
    S = np.empty(D)
    best_val = -np.inf
    best_idx = -1
    for flat in range(total):
        # odometer: last variable varies fastest (row-major)
        if flat > 0:
            pos = n - 1
            while True:
                digits[pos] += 1
                if digits[pos] < L:
                    break
                digits[pos] = 0
                pos -= 1
        val = 0.0
        for i in range(D):
            S[i] = 0.0
        for t in range(T):
            for i in range(D):
                x = levels[digits[t * D + i]]
                S[i] += x
                val += val_c[t, i] * x ** val_p[t]
        val -= _eval_point(coefs, expo, S)
        if val > best_val:
            best_val = val
            best_idx = flat
    return best_val, best_idx
