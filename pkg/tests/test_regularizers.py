import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynregret.oracle import GridSpec, brute_prox
from dynregret.regularizers import (CompositeLoss, WeightedL1, WeightRule, prox, reg_eval_subgrad,
                                    soft_threshold, update_weights)
from dynregret.losses import LabeledExample, hinge
from dynregret.vecspace import BoxSet, project

PROTOCOL_RULE = WeightRule(tau=1.0, eps_w=0.1)


@pytest.mark.parametrize("prev,expected", [
    ([2.0, 0.5], [0.1, 1.0]),
    ([0.0, 0.0], [1.0, 1.0]),
    ([-3.0], [0.1]),
])
def test_update_weights_examples(prev, expected):
    np.testing.assert_array_equal(update_weights(prev, PROTOCOL_RULE), expected)


def test_weight_at_threshold_is_one():
    np.testing.assert_array_equal(update_weights([1.0, -1.0], PROTOCOL_RULE), [1.0, 1.0])


def test_weight_rule_validation():
    for tau, eps in ((0.0, 0.1), (1.0, 0.0), (1.0, 1.0)):
        with pytest.raises(ValueError):
            WeightRule(tau, eps)
    with pytest.raises(ValueError):
        update_weights([np.nan], PROTOCOL_RULE)
    with pytest.raises(ValueError):
        WeightedL1(0.4, [0.0, 1.0])
    with pytest.raises(ValueError):
        WeightedL1(-0.1, [1.0])


def test_reg_eval_examples():
    v = reg_eval_subgrad(WeightedL1(0.4, [1, 1]), [1.0, -2.0])
    assert float(v.value) == pytest.approx(1.2)
    np.testing.assert_allclose(v.subgradient, [0.4, -0.4])
    v = reg_eval_subgrad(WeightedL1(0.4, [1, 1]), [0.0, 0.0])
    assert v.value == 0
    np.testing.assert_array_equal(v.subgradient, [0, 0])
    v = reg_eval_subgrad(WeightedL1(0.4, [0.1, 1]), [10.0, 1.0])
    assert float(v.value) == pytest.approx(0.8)
    np.testing.assert_allclose(v.subgradient, [0.04, 0.4])
    with pytest.raises(ValueError):
        reg_eval_subgrad(WeightedL1(0.4, [1, 1]), [1.0])


def test_prox_examples():
    np.testing.assert_allclose(prox(WeightedL1(1.0, [1, 1]), 1.0, [3.0, -0.5], BoxSet.cube(2, -10, 10)), [2, 0])
    np.testing.assert_allclose(prox(WeightedL1(1.0, [1]), 1.0, [3.0], BoxSet([0.0], [1.5])), [1.5])
    with pytest.raises(ValueError):
        prox(WeightedL1(1.0, [1]), 0.0, [3.0], BoxSet([0.0], [1.5]))
    with pytest.raises(ValueError):
        prox(WeightedL1(1.0, [1, 1]), 1.0, [3.0], BoxSet([0.0], [1.5]))


def test_prox_matches_grid_oracle_in_five_dims(rng):
    box = BoxSet.cube(5, -2, 2)
    for _ in range(20):
        r = WeightedL1(rng.uniform(0, 2), rng.uniform(0.05, 1, 5))
        eta, x = rng.uniform(0.01, 2), rng.uniform(-4, 4, 5)
        assert np.max(np.abs(prox(r, eta, x, box) - brute_prox(r, eta, x, box, GridSpec(1e-4)))) <= 1e-3


def _instance(rng, n):
    lo = rng.uniform(-2, 0.5, n)
    box = BoxSet(lo, lo + rng.uniform(0.1, 3, n))
    return box, WeightedL1(rng.uniform(0, 2), rng.uniform(0.05, 1, n)), rng.uniform(0.01, 3), rng.normal(scale=3, size=n)


def test_prox_optimality_certificate(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        box, r, eta, x = _instance(rng, n)
        p = prox(r, eta, x, box)
        u = box.sample(rng, 100)
        obj = lambda z: reg_eval_subgrad(r, z).value + np.sum((z - x) ** 2, axis=-1) / (2 * eta)
        assert np.all(obj(p) <= obj(u) + 1e-9)


def test_prox_nonexpansive(rng):
    for _ in range(500):
        n = int(rng.integers(1, 6))
        box, r, eta, x = _instance(rng, n)
        y = rng.normal(scale=3, size=n)
        assert np.linalg.norm(prox(r, eta, x, box) - prox(r, eta, y, box)) <= np.linalg.norm(x - y) + 1e-12


@given(st.floats(-10, 10), st.floats(0.01, 5))
def test_zero_rho_is_projection(v, eta):
    box = BoxSet([-1.0, 0.0], [1.0, 2.0])
    x = np.array([v, -v])
    np.testing.assert_array_equal(prox(WeightedL1(0.0, [1, 1]), eta, x, box), project(box, x))
    small = prox(WeightedL1(1e-12, [1, 1]), eta, x, box)
    np.testing.assert_allclose(small, project(box, x), atol=1e-10)


def test_regularizer_subgradient_bound(rng):
    for n in (1, 3, 8):
        r = WeightedL1(0.4, rng.uniform(0.05, 1, n))
        g = reg_eval_subgrad(r, rng.normal(size=(1000, n))).subgradient
        assert np.max(np.linalg.norm(g, axis=1)) <= 0.4 * np.sqrt(n) + 1e-12


def test_batched_prox_with_per_stream_steps(rng):
    box = BoxSet.cube(2)
    w = rng.uniform(0.1, 1, (4, 2))
    x = rng.normal(size=(4, 2))
    eta = np.array([0.1, 0.5, 1.0, 2.0])
    out = prox(WeightedL1(0.4, w), eta, x, box)
    for i in range(4):
        np.testing.assert_array_equal(out[i], prox(WeightedL1(0.4, w[i]), eta[i], x[i], box))


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([3.0, -0.5, -2.0]), 1.0), [2.0, 0.0, -1.0])


def test_composite_loss(rng):
    F = CompositeLoss(hinge, LabeledExample(1.0, [1.0, 0.0]), WeightedL1(0.4, [1, 1]))
    val, gf, gr = F.evaluate([0.0, 0.0])
    assert val == 1.0
    np.testing.assert_array_equal(gf, [-1, 0])
    np.testing.assert_array_equal(gr, [0, 0])
    pts = rng.normal(size=(5, 2))
    np.testing.assert_allclose(F(pts), [F.evaluate(p)[0] for p in pts])
