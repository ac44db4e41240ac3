import numpy as np
import pytest

from dynregret.losses import (LabeledExample, LossEvaluation, absolute_loss, eps_insensitive,
                              generalized_hinge, hinge, make_loss, ridge_augment, ridged)


def ex(y, a, binary=True):
    return LabeledExample(y, a, binary=binary)


def check(ev, value, grad):
    assert float(ev.value) == pytest.approx(value)
    np.testing.assert_allclose(ev.subgradient, grad)


def test_hinge_examples():
    check(hinge([2, 0], ex(1, [1, 0])), 0, [0, 0])
    check(hinge([0, 0], ex(1, [1, 0])), 1, [-1, 0])
    check(hinge([1, 0], ex(-1, [2, 0])), 3, [2, 0])


def test_hinge_margin_kink_is_zero():
    check(hinge([1.0], ex(1, [1.0])), 0, [0])


def test_generalized_hinge_examples():
    check(generalized_hinge([-1], ex(1, [1]), 2), 3, [-2])
    check(generalized_hinge([0.5], ex(1, [1]), 2), 0.5, [-1])
    check(generalized_hinge([2], ex(1, [1]), 2), 0, [0])


def test_generalized_hinge_breakpoints_take_flatter_side():
    check(generalized_hinge([0.0], ex(1, [1]), 3), 1, [-1])
    check(generalized_hinge([1.0], ex(1, [1]), 3), 0, [0])
    with pytest.raises(ValueError):
        generalized_hinge([0.0], ex(1, [1]), 1.0)


def test_absolute_examples():
    check(absolute_loss([3], ex(1, [1])), 2, [1])
    check(absolute_loss([1], ex(1, [1])), 0, [0])
    check(absolute_loss([1, 1], ex(-1, [2, 0])), 3, [2, 0])


def test_eps_insensitive_examples():
    check(eps_insensitive([1.2], ex(1, [1]), 0.5), 0, [0])
    check(eps_insensitive([2], ex(1, [1]), 0.5), 0.5, [1])
    # a regression target of zero, so the label is not a class label
    check(eps_insensitive([-1], ex(0, [1], binary=False), 0.5), 0.5, [-1])
    check(eps_insensitive([1.5], ex(1, [1]), 0.5), 0, [0])
    with pytest.raises(ValueError):
        eps_insensitive([0.0], ex(1, [1]), 0.0)


def test_ridge_examples():
    r = ridge_augment(LossEvaluation(1.0, np.array([-1.0, 0.0])), [2.0, 0.0], 1.0)
    check(r, 3, [1, 0])
    base = LossEvaluation(1.0, np.array([-1.0, 0.0]))
    assert ridge_augment(base, [2.0, 0.0], 0.0) is base
    check(ridge_augment(LossEvaluation(0.0, np.array([0.0])), [1.0], 2.0), 1, [2])
    with pytest.raises(ValueError):
        ridge_augment(base, [2.0, 0.0], -1.0)


def test_label_validation():
    with pytest.raises(ValueError):
        LabeledExample(0, [1.0])
    with pytest.raises(ValueError):
        LabeledExample(1, [np.inf])
    with pytest.raises(ValueError):
        hinge([1.0, 2.0, 3.0], ex(1, [1.0, 0.0]))


def test_batched_evaluation_matches_loop(rng):
    y = rng.choice([-1.0, 1.0], size=(4, 3))
    a = rng.normal(size=(4, 3, 2))
    x = rng.normal(size=(4, 3, 2))
    batched = hinge(x, LabeledExample(y, a))
    for i in range(4):
        for j in range(3):
            single = hinge(x[i, j], LabeledExample(y[i, j], a[i, j]))
            assert batched.value[i, j] == single.value
            np.testing.assert_array_equal(batched.subgradient[i, j], single.subgradient)


LOSS_CASES = [
    ("hinge", {}, True),
    ("generalized_hinge", {"alpha": 2.5}, True),
    ("absolute", {}, False),
    ("eps_insensitive", {"eps": 0.3}, False),
]


@pytest.mark.parametrize("name,params,binary", LOSS_CASES)
def test_convexity_certificate(name, params, binary, rng):
    loss = make_loss(name, **params)
    k, n = 10_000, 3
    y = rng.choice([-1.0, 1.0], size=k) if binary else rng.normal(size=k)
    e = LabeledExample(y, rng.normal(size=(k, n)), binary=binary)
    x, z = rng.normal(scale=2, size=(k, n)), rng.normal(scale=2, size=(k, n))
    fx, fz = loss(x, e), loss(z, e)
    assert np.all(fz.value >= fx.value + np.sum(fx.subgradient * (z - x), axis=1) - 1e-9)


@pytest.mark.parametrize("name,params,binary", LOSS_CASES)
def test_strong_convexity_certificate(name, params, binary, rng):
    lam = 1.3
    loss = make_loss(name, lam=lam, **params)
    k, n = 10_000, 3
    y = rng.choice([-1.0, 1.0], size=k) if binary else rng.normal(size=k)
    e = LabeledExample(y, rng.normal(size=(k, n)), binary=binary)
    x, z = rng.normal(scale=2, size=(k, n)), rng.normal(scale=2, size=(k, n))
    fx, fz = loss(x, e), loss(z, e)
    lower = fx.value + np.sum(fx.subgradient * (z - x), axis=1) + 0.5 * lam * np.sum((z - x) ** 2, axis=1)
    assert np.all(fz.value >= lower - 1e-9)


@pytest.mark.parametrize("name,params,binary", LOSS_CASES)
def test_subgradient_bound(name, params, binary, rng):
    lam = 0.7
    loss = make_loss(name, lam=lam, **params)
    lo, hi = -np.ones(3), 2 * np.ones(3)
    x = rng.uniform(lo, hi, size=(5000, 3))
    a = rng.normal(size=3)
    e = LabeledExample(np.ones(5000), np.tile(a, (5000, 1)), binary=binary)
    g = loss(x, e).subgradient
    slope = params.get("alpha", 1.0)
    bound = slope * np.linalg.norm(a) + lam * np.linalg.norm(np.maximum(abs(lo), abs(hi)))
    assert np.max(np.linalg.norm(g, axis=1)) <= bound + 1e-12


def test_ridged_wrapper_matches_augment(rng):
    e = LabeledExample(1.0, rng.normal(size=2))
    x = rng.normal(size=2)
    a = ridged(hinge, 2.0)(x, e)
    b = ridge_augment(hinge(x, e), x, 2.0)
    assert a.value == b.value
    np.testing.assert_array_equal(a.subgradient, b.subgradient)
    with pytest.raises(ValueError):
        make_loss("logistic")
