from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import central_diff
from procura.instances import (
    GeneratorSpec,
    gen_adversarial_gradient,
    gen_adversarial_scalar,
    gen_random_linear,
    load_instance,
    save_instance,
)

DATA = Path(__file__).parent / "data"


def test_scalar_examples():
    assert gen_adversarial_scalar(4).coef_matrix().ravel().tolist() == [2, 4, 6, 8]
    assert gen_adversarial_scalar(2).coef_matrix().ravel().tolist() == [2, 4]
    assert gen_adversarial_scalar(100).coef_matrix()[-1, 0] == 200
    with pytest.raises(ValueError):
        gen_adversarial_scalar(3)


@given(st.integers(1, 60))
def test_scalar_coefficients_increase(half):
    c = gen_adversarial_scalar(2 * half).coef_matrix().ravel()
    assert np.all(np.diff(c) > 0)


def test_gradient_examples(two_res, quad):
    C = gen_adversarial_gradient(two_res, 2).coef_matrix()
    np.testing.assert_allclose(C[0], central_diff(two_res, np.ones(2)), rtol=1e-6)
    np.testing.assert_allclose(C[0], [8, 4])
    np.testing.assert_allclose(C[1], [272, 16])
    assert gen_adversarial_gradient(quad, 3).coef_matrix()[2, 0] == 6.0


def test_random_is_deterministic():
    a = gen_random_linear(5, 3, 0.0, 2.0, seed=11)
    b = gen_random_linear(5, 3, 0.0, 2.0, seed=11)
    assert a.to_json() == b.to_json()
    assert gen_random_linear(5, 3, 0.0, 2.0, seed=12) != a


def test_random_zero_range():
    assert np.all(gen_random_linear(4, 2, 0.0, 0.0, seed=1).coef_matrix() == 0)


def test_random_matches_golden_file():
    golden = (DATA / "random_T3_D2_seed7.json").read_text(encoding="utf-8")
    assert gen_random_linear(3, 2, 0.0, 1.0, seed=7).to_json() == golden


@given(st.integers(0, 2**32 - 1), st.floats(0, 5), st.floats(0, 5))
def test_random_respects_range(seed, x, y):
    lo, hi = min(x, y), max(x, y)
    C = gen_random_linear(4, 2, lo, hi, seed).coef_matrix()
    assert np.all((C >= lo) & (C <= hi))


def test_random_rejects_negative_range():
    with pytest.raises(ValueError):
        gen_random_linear(2, 1, -1.0, 1.0)


def test_generator_spec(two_res):
    spec = GeneratorSpec.from_dict({"kind": "gradient", "T": 3})
    assert spec.build(two_res).horizon == 3
    with pytest.raises(ValueError):
        spec.build()
    with pytest.raises(ValueError):
        GeneratorSpec("bogus", 3)
    with pytest.raises(ValueError):
        GeneratorSpec("random", 0)
    assert GeneratorSpec.from_dict(spec.to_dict()) == spec


def test_save_and_load(tmp_path):
    inst = gen_random_linear(3, 2, seed=3)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    assert load_instance(path) == inst
    assert b"\r\n" not in path.read_bytes()
