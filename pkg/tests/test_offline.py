import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import two_resource_cost
from oracles import enumerate_offline
from procura.cost_model import CostFunction, Valuation
from procura.errors import DomainError
from procura.instances import gen_adversarial_scalar
from procura.offline import (
    Instance,
    brute_force_offline,
    dual_objective,
    instance_from_coefficients,
    primal_objective,
    solve_offline,
)


def test_instance_invariants():
    with pytest.raises(ValueError):
        Instance(())
    with pytest.raises(ValueError):
        Instance((Valuation.linear((1.0,)), Valuation.linear((1.0, 2.0))))


def test_instance_json_roundtrip():
    inst = Instance((Valuation.linear((1.0, 2.0)), Valuation.concave_power((0.5, 3.0), 0.5)))
    text = inst.to_json()
    data = json.loads(text)
    assert data["D"] == 2 and data["T"] == 2
    assert Instance.from_json(text) == inst


def test_scalar_adversarial_optimum(quad):
    sol = solve_offline(gen_adversarial_scalar(4), quad)
    assert sol.objective == pytest.approx(10.0, abs=1e-6)
    np.testing.assert_allclose(sol.allocations.ravel(), [0, 0, 1, 1], atol=1e-6)


def test_scalar_adversarial_optimum_long_horizon(quad):
    sol = solve_offline(gen_adversarial_scalar(100), quad)
    assert sol.objective == pytest.approx(5050.0, abs=0.5)
    assert sol.converged


def test_two_customer_optimum(quad):
    inst = instance_from_coefficients([[1.0], [3.0]])
    sol = solve_offline(inst, quad)
    assert sol.objective == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(sol.allocations.ravel(), [0, 1], atol=1e-6)
    # frozen from enumerate_offline at step 0.01
    assert enumerate_offline([[1.0], [3.0]], lambda u: float(u @ u), 0.5)[0] == 2.0


def test_empty_value_instance(two_res):
    inst = instance_from_coefficients(np.zeros((3, 2)))
    sol = solve_offline(inst, two_res)
    assert sol.objective == 0.0
    assert np.all(sol.allocations == 0.0)


def test_brute_force_examples(quad):
    inst = instance_from_coefficients([[1.0], [3.0]])
    val, X = brute_force_offline(inst, quad, 0.5)
    assert val == 2.0
    np.testing.assert_array_equal(X.ravel(), [0, 1])
    val, X = brute_force_offline(gen_adversarial_scalar(4), quad, 1.0)
    assert val == 10.0
    # every c_t below the initial marginal cost: take nothing
    cheap = instance_from_coefficients([[0.5], [0.9]])
    lin = CostFunction.from_terms([(1.0, (1,)), (1.0, (2,))])
    val, X = brute_force_offline(cheap, lin, 1.0)
    assert val == 0.0 and np.all(X == 0)


def test_brute_force_rejects_bad_step(quad):
    with pytest.raises(ValueError):
        brute_force_offline(instance_from_coefficients([[1.0]]), quad, 0.3)


def test_brute_force_methods_agree(rng):
    f = two_resource_cost()
    for _ in range(10):
        inst = instance_from_coefficients(rng.uniform(0, 12, (2, 2)))
        e, Xe = brute_force_offline(inst, f, 0.25, method="enumerate")
        d, Xd = brute_force_offline(inst, f, 0.25, method="dp")
        assert e == pytest.approx(d, abs=1e-9)
        assert primal_objective(inst, f, Xd) == pytest.approx(d, abs=1e-9)


def test_brute_force_matches_python_oracle(rng, quad):
    for _ in range(5):
        C = rng.uniform(0, 4, (3, 1))
        ours, _ = brute_force_offline(instance_from_coefficients(C), quad, 0.25)
        ref, _ = enumerate_offline(C, lambda u: float(u @ u), 0.25)
        assert ours == pytest.approx(ref, abs=1e-12)


def test_solver_dominates_grid_optimum(rng):
    f = two_resource_cost()
    for _ in range(10):
        inst = instance_from_coefficients(rng.uniform(0, 15, (3, 2)))
        grid_best, _ = brute_force_offline(inst, f, 0.05, method="dp")
        sol = solve_offline(inst, f)
        assert sol.objective >= grid_best - 1e-7
        assert sol.objective <= grid_best + 0.02 * (1 + abs(sol.objective))


def test_concave_power_instance(quad):
    inst = Instance((Valuation.concave_power((1.0,), 0.5),))
    sol = solve_offline(inst, quad)
    # maximize sqrt(x) - x^2: x = (1/4)^(2/3)
    x = 0.25 ** (2 / 3)
    assert sol.objective == pytest.approx(np.sqrt(x) - x * x, abs=1e-8)


def test_dual_examples(quad):
    inst = instance_from_coefficients([[2.0]])
    assert dual_objective(inst, quad, [2.0], [[2.0]]) == pytest.approx(1.0)
    zero = instance_from_coefficients([[0.0], [0.0]])
    assert dual_objective(zero, quad, [0.0], [[0.0], [0.0]]) == 0.0
    # with positive coefficients z = 0 lies outside the conjugate's domain
    pos = instance_from_coefficients([[1.0], [2.0]])
    assert dual_objective(pos, quad, [0.0], [[0.0], [0.0]]) == np.inf


def test_dual_outside_conjugate_domain_is_infinite(quad):
    inst = instance_from_coefficients([[2.0]])
    assert dual_objective(inst, quad, [1.0], [[1.0]]) == np.inf


def test_dual_rejects_negative(quad):
    inst = instance_from_coefficients([[2.0]])
    with pytest.raises(DomainError):
        dual_objective(inst, quad, [-1.0], [[2.0]])


@given(st.integers(0, 2**32 - 1))
def test_weak_duality(seed):
    rng = np.random.default_rng(seed)
    f = two_resource_cost()
    T = int(rng.integers(1, 4))
    C = rng.uniform(0, 10, (T, 2))
    inst = instance_from_coefficients(C)
    pstar = solve_offline(inst, f).objective
    lam = rng.uniform(0, 15, 2)
    # for linear valuations the conjugate is finite only at z_t = c_t
    assert dual_objective(inst, f, lam, C) >= pstar - 1e-6


@given(st.integers(0, 2**32 - 1))
def test_offline_optimum_is_nonnegative(seed):
    rng = np.random.default_rng(seed)
    inst = instance_from_coefficients(rng.uniform(0, 3, (int(rng.integers(1, 5)), 1)))
    sol = solve_offline(inst, CostFunction.monomial(1.0, (3,)))
    assert sol.objective >= 0.0
    assert np.all((sol.allocations >= 0) & (sol.allocations <= 1))


def test_csv_layout(quad):
    sol = solve_offline(gen_adversarial_scalar(4), quad)
    lines = sol.to_csv().splitlines()
    assert lines[0] == "t,x_1"
    assert len(lines) == 5
