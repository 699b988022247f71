"""Compare the numba and numpy kernel backends on the hot paths.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once untimed (this triggers numba compilation), then
timed over ``--repeat`` calls; the best time is reported. Outputs of the two
backends are compared so a speedup never hides a wrong answer.
"""

import argparse
import time

import numpy as np

from procura.kernels import get_backend

# u1^4 + u1^2 + 2 u1 u2 + u2^2 on the 101 x 101 ratio grid over [0, 10]^2
COEFS = np.array([1.0, 1.0, 2.0, 1.0])
EXPO = np.array([[4.0, 0.0], [2.0, 0.0], [1.0, 1.0], [0.0, 2.0]])


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    axis = np.linspace(0.0, 10.0, 101)
    U = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    rng = np.random.default_rng(0)
    lam = 4.0 * get_backend("numpy").mono_grad(COEFS, EXPO, U)
    starts = np.stack([np.ones_like(lam), np.full_like(lam, 5.0)])
    levels = np.linspace(0.0, 1.0, 11)
    val_c = rng.uniform(0, 20, (3, 2))
    return {
        "mono_eval (10201 pts)": lambda be: be.mono_eval(COEFS, EXPO, U),
        "mono_grad (10201 pts)": lambda be: be.mono_grad(COEFS, EXPO, U),
        "conjugate_batch (10201 x 2 starts)": lambda be: be.conjugate_batch(COEFS, EXPO, lam, starts, 5000, 1e-9, 1e12)[0],
        "grid_enumerate (11^6 allocations)": lambda be: be.grid_enumerate(levels, val_c, np.ones(3), COEFS, EXPO)[0],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    try:
        nb = get_backend("numba")
    except ImportError:
        print("numba is not installed; install the 'fast' extra to compare backends")
        return
    npy = get_backend("numpy")

    print(f"{'kernel':<38}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, call in cases().items():
        t_np, out_np = best_time(lambda: call(npy), args.repeat)
        t_nb, out_nb = best_time(lambda: call(nb), args.repeat)
        if not np.allclose(out_np, out_nb, rtol=1e-8, atol=1e-8):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<38}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
