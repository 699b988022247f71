"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_numba``; the two
are checked against each other in the test suite.
"""

import numpy as np

# status codes shared with the numba backend
CONVERGED = 0
MAX_ITERS = 1
DIVERGED = 2
STALLED = 3

_ARMIJO = 1e-4
_RESOLUTION = 1e-13
_MAX_BACKTRACK = 60


def mono_eval(coefs, expo, U):
    """Sum of monomials at each row of ``U`` (0**0 == 1)."""
    P = np.prod(U[:, None, :] ** expo[None, :, :], axis=2)
    return P @ coefs


def mono_grad(coefs, expo, U):
    M, D = U.shape
    G = np.zeros((M, D))
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(D):
            mask = expo[:, i] > 0
            if not mask.any():
                continue
            E = expo[mask].copy()
            E[:, i] -= 1.0
            P = np.prod(U[:, None, :] ** E[None, :, :], axis=2)
            G[:, i] = P @ (coefs[mask] * expo[mask, i])
    return G


def mono_hess(coefs, expo, U):
    M, D = U.shape
    H = np.zeros((M, D, D))
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(D):
            for j in range(i, D):
                if i == j:
                    fac = expo[:, i] * (expo[:, i] - 1.0)
                else:
                    fac = expo[:, i] * expo[:, j]
                mask = fac != 0
                if not mask.any():
                    continue
                E = expo[mask].copy()
                E[:, i] -= 1.0
                E[:, j] -= 1.0
                P = np.prod(U[:, None, :] ** E[None, :, :], axis=2)
                H[:, i, j] = P @ (coefs[mask] * fac[mask])
                H[:, j, i] = H[:, i, j]
    return H


def _newton_batch(coefs, expo, lam, W, max_iters, tol, cap):
    M, D = lam.shape
    W = W.copy()
    status = np.full(M, MAX_ITERS, dtype=np.int64)
    iters = np.zeros(M, dtype=np.int64)
    force_grad = np.zeros(M, dtype=bool)
    act = np.arange(M)
    eye = np.eye(D)
    for it in range(max_iters):
        if act.size == 0:
            break
        Wa = W[act]
        La = lam[act]
        g = La - mono_grad(coefs, expo, Wa)
        at_bound = (Wa <= 0.0) & (g <= 0.0)
        pg = np.where(at_bound, 0.0, g)
        scale = 1.0 + np.abs(La).max(axis=1)
        done = np.abs(pg).max(axis=1) <= tol * scale
        status[act[done]] = CONVERGED
        iters[act] = it
        keep = ~done
        act, Wa, La, g, at_bound = act[keep], Wa[keep], La[keep], g[keep], at_bound[keep]
        if act.size == 0:
            break
        rhs = np.where(at_bound, 0.0, g)

        H = mono_hess(coefs, expo, Wa)
        fixed = at_bound[:, :, None] | at_bound[:, None, :]
        H = np.where(fixed, 0.0, H) + at_bound[:, :, None] * eye
        finite_h = np.isfinite(H).all(axis=(1, 2)) & ~force_grad[act]
        d = rhs.copy()
        if finite_h.any():
            Hf = H[finite_h]
            reg = 1e-12 * (1.0 + np.abs(np.diagonal(Hf, axis1=1, axis2=2)).max(axis=1))
            Hf = Hf + reg[:, None, None] * eye
            try:
                dn = np.linalg.solve(Hf, rhs[finite_h][..., None])[..., 0]
            except np.linalg.LinAlgError:
                dn = rhs[finite_h]
            d[finite_h] = dn
        newton = finite_h.copy()
        bad = ~np.isfinite(d).all(axis=1) | ((d * rhs).sum(axis=1) <= 0.0)
        d[bad] = rhs[bad]
        newton &= ~bad

        phi0 = (La * Wa).sum(axis=1) - mono_eval(coefs, expo, Wa)
        t = np.ones(act.size)
        accepted = np.zeros(act.size, dtype=bool)
        Wn = Wa.copy()
        for _ in range(_MAX_BACKTRACK):
            pend = np.nonzero(~accepted)[0]
            if pend.size == 0:
                break
            cand = np.maximum(Wa[pend] + t[pend, None] * d[pend], 0.0)
            with np.errstate(over="ignore", invalid="ignore"):
                phin = (La[pend] * cand).sum(axis=1) - mono_eval(coefs, expo, cand)
            ok = phin >= phi0[pend] + _ARMIJO * (g[pend] * (cand - Wa[pend])).sum(axis=1)
            # a full newton step whose change is below the rounding level of phi is taken as is
            ok |= newton[pend] & (t[pend] == 1.0) & (phin >= phi0[pend] - _RESOLUTION * (1.0 + np.abs(phi0[pend])))
            Wn[pend[ok]] = cand[ok]
            accepted[pend[ok]] = True
            t[pend[~ok]] *= 0.5

        # a failed newton line search retries with the gradient; a failed
        # gradient line search means no further progress is possible
        retry = ~accepted & newton
        stall = ~accepted & ~newton
        force_grad[act] = retry
        status[act[stall]] = STALLED
        W[act] = Wn
        diverged = (Wn > cap).any(axis=1) | ~np.isfinite(Wn).all(axis=1)
        status[act[diverged]] = DIVERGED
        act = act[~stall & ~diverged]
    else:
        iters[act] = max_iters
    values = (lam * W).sum(axis=1) - mono_eval(coefs, expo, W)
    return values, W, status, iters


def conjugate_batch(coefs, expo, lam, starts, max_iters, tol, cap):
    """Maximise ``lam.w - f(w)`` over ``w >= 0`` for every row of ``lam``.

    ``starts`` has shape (S, M, D); the best result over the starts is kept.
    Returns (values, maximizers, status, iterations).
    """
    best_v = best_w = best_s = best_i = None
    for s in range(starts.shape[0]):
        v, w, st, it = _newton_batch(coefs, expo, lam, starts[s], max_iters, tol, cap)
        if best_v is None:
            best_v, best_w, best_s, best_i = v, w, st, it
            continue
        # a diverged start always wins: the supremum is unbounded
        better = (st == DIVERGED) & (best_s != DIVERGED)
        better |= (best_s != DIVERGED) & (st != DIVERGED) & (v > best_v)
        best_v = np.where(better, v, best_v)
        best_w = np.where(better[:, None], w, best_w)
        best_s = np.where(better, st, best_s)
        best_i = np.where(better, it, best_i)
    return best_v, best_w, best_s, best_i


def grid_enumerate(levels, val_c, val_p, coefs, expo, chunk=1 << 15):
    """Exhaustive maximization of sum_t v_t(x_t) - f(sum_t x_t) on a grid.

    Every entry of every x_t ranges over ``levels``. Returns the best value and
    the flat index (row-major over the T*D variables) of its first occurrence.
    """
    T, D = val_c.shape
    n = T * D
    L = levels.size
    total = L**n
    best_val = -np.inf
    best_idx = -1
    shape = (L,) * n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.stack(np.unravel_index(idx, shape), axis=1)
        X = levels[digits].reshape(-1, T, D)
        vals = (val_c[None] * X ** val_p[None, :, None]).sum(axis=(1, 2))
        vals -= mono_eval(coefs, expo, X.sum(axis=1))
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_idx = int(idx[k])
    return best_val, best_idx
