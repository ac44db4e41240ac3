import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from dynregret.vecspace import BoxSet, as_vector, diameter, project


@pytest.mark.parametrize("box,x,expected", [
    (BoxSet.cube(2), [2.0, 0.5], [1.0, 0.5]),
    (BoxSet.cube(2), [0.0, 0.0], [0.0, 0.0]),
    (BoxSet([0, 0], [2, 2]), [-3.0, 5.0], [0.0, 2.0]),
])
def test_project_examples(box, x, expected):
    np.testing.assert_array_equal(project(box, x), expected)


@pytest.mark.parametrize("box,expected", [
    (BoxSet.cube(1), 2.0),
    (BoxSet([0, 0], [3, 4]), 5.0),
    (BoxSet([0, 0], [0, 1]), 1.0),
])
def test_diameter_examples(box, expected):
    assert diameter(box) == expected
    assert box.diameter == expected


def test_invalid_boxes():
    with pytest.raises(ValueError):
        BoxSet([1.0], [0.0])
    with pytest.raises(ValueError):
        BoxSet([0.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        BoxSet([0.0], [np.inf])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        project(BoxSet.cube(2), [1.0, 2.0, 3.0])


def test_non_finite_vector_rejected():
    with pytest.raises(ValueError):
        as_vector([np.nan, 1.0])


def test_bounds_are_read_only():
    box = BoxSet.cube(2)
    with pytest.raises(ValueError):
        box.lower[0] = 5.0


def test_batched_projection():
    box = BoxSet.cube(2)
    x = np.array([[[2.0, -3.0]], [[0.2, 0.1]]])
    assert project(box, x).shape == x.shape


finite = st.floats(-50, 50, allow_nan=False)


@st.composite
def box_and_points(draw):
    n = draw(st.integers(1, 5))
    lo = draw(arrays(float, n, elements=st.floats(-5, 5)))
    width = draw(arrays(float, n, elements=st.floats(0.01, 5)))
    x = draw(arrays(float, n, elements=finite))
    return BoxSet(lo, lo + width), x


@given(box_and_points())
def test_projection_idempotent(bx):
    box, x = bx
    p = project(box, x)
    np.testing.assert_array_equal(project(box, p), p)
    assert box.contains(p)


@given(box_and_points(), st.integers(0, 2**32 - 1))
def test_projection_is_nearest(bx, seed):
    box, x = bx
    s = box.sample(np.random.default_rng(seed), 20)
    p = project(box, x)
    assert np.all(np.linalg.norm(p - x) <= np.linalg.norm(s - x, axis=1) + 1e-12)


def test_pairwise_distance_bounded_by_diameter(rng):
    for n in (1, 2, 3, 7):
        box = BoxSet(rng.uniform(-3, 0, n), rng.uniform(0.1, 3, n))
        x, y = box.sample(rng, 1000), box.sample(rng, 1000)
        assert np.all(np.linalg.norm(x - y, axis=1) <= box.diameter + 1e-12)
        corners = np.stack([box.lower, box.upper])
        assert np.isclose(np.linalg.norm(corners[1] - corners[0]), box.diameter)
