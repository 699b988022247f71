import os
import subprocess
import sys

import numpy as np
import pytest

from procura import kernels
from procura.kernels import get_backend

numba = pytest.importorskip("numba")

NP = get_backend("numpy")
NB = get_backend("numba")

# u1^4 + u1^2 + 2 u1 u2 + u2^2
COEFS = np.array([1.0, 1.0, 2.0, 1.0])
EXPO = np.array([[4.0, 0.0], [2.0, 0.0], [1.0, 1.0], [0.0, 2.0]])


def test_monomial_kernels_agree(rng):
    U = rng.uniform(0, 3, (200, 2))
    U[:5] = 0.0
    np.testing.assert_allclose(NB.mono_eval(COEFS, EXPO, U), NP.mono_eval(COEFS, EXPO, U), rtol=1e-13)
    np.testing.assert_allclose(NB.mono_grad(COEFS, EXPO, U), NP.mono_grad(COEFS, EXPO, U), rtol=1e-13)
    np.testing.assert_allclose(NB.mono_hess(COEFS, EXPO, U), NP.mono_hess(COEFS, EXPO, U), rtol=1e-13)


def test_conjugate_kernels_agree(rng):
    lam = rng.uniform(0, 60, (300, 2))
    starts = np.stack([np.zeros_like(lam), np.ones_like(lam)])
    out_np = NP.conjugate_batch(COEFS, EXPO, lam, starts, 5000, 1e-9, 1e12)
    out_nb = NB.conjugate_batch(COEFS, EXPO, lam, starts, 5000, 1e-9, 1e12)
    np.testing.assert_array_equal(out_np[2], kernels.CONVERGED)
    np.testing.assert_array_equal(out_nb[2], kernels.CONVERGED)
    np.testing.assert_allclose(out_nb[0], out_np[0], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(out_nb[1], out_np[1], rtol=1e-6, atol=1e-7)


def test_conjugate_kernel_reports_divergence():
    # 2u with price 3: the objective u grows without bound
    coefs, expo = np.array([2.0]), np.array([[1.0]])
    lam = np.array([[3.0]])
    starts = np.ones((1, 1, 1))
    for be in (NP, NB):
        _, _, status, _ = be.conjugate_batch(coefs, expo, lam, starts, 5000, 1e-9, 1e12)
        assert status[0] == kernels.DIVERGED


def test_grid_enumerate_agrees(rng):
    levels = np.linspace(0, 1, 5)
    val_c = rng.uniform(0, 10, (2, 2))
    val_p = np.ones(2)
    a = NP.grid_enumerate(levels, val_c, val_p, COEFS, EXPO)
    b = NB.grid_enumerate(levels, val_c, val_p, COEFS, EXPO)
    assert a[0] == pytest.approx(b[0], abs=1e-12)
    assert a[1] == b[1]


@pytest.mark.parametrize("name", ["numpy", "numba"])
def test_environment_selects_backend(name):
    env = dict(os.environ, PROCURA_BACKEND=name)
    out = subprocess.run(
        [sys.executable, "-c", "import procura.kernels as k; print(k.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == name


def test_unknown_backend_is_rejected():
    with pytest.raises(ValueError):
        get_backend("fortran")
