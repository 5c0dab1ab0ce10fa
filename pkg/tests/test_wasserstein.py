import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dsc.errors import InputError
from dsc.quantile import StepQuantileFn, evaluate, quantile_fn
from dsc.wasserstein import barycenter, merged_grid, w2_distance, w2_squared

vals = st.floats(-100, 100, allow_nan=False)


def sorted_pairing(x, y):
    return np.sqrt(np.mean((np.sort(x) - np.sort(y)) ** 2))


def test_examples():
    f = quantile_fn([1.0, 4.0])
    assert w2_distance(f, f) == 0
    assert w2_distance(quantile_fn([2]), quantile_fn([7])) == 5
    assert w2_distance(quantile_fn([0, 2]), quantile_fn([1, 3])) == 1


def test_unequal_sizes_by_hand():
    # {0,1} vs {0,0,3}: levels on (0,1/3], (1/3,1/2], (1/2,2/3], (2/3,1]
    a, b = quantile_fn([0, 1]), quantile_fn([0, 0, 3])
    expect = (0 * 1 / 3) + (0 * 1 / 6) + (1 * 1 / 6) + (4 * 1 / 3)
    assert w2_squared(a, b) == pytest.approx(expect, abs=1e-15)
    # repeated zeros merge, so the grid is {1/2, 2/3, 1}
    assert merged_grid([a, b]).breakpoints.tolist() == pytest.approx([1 / 2, 2 / 3, 1])


def test_barycenter_examples():
    d = quantile_fn([1.0, 5.0, 2.0])
    assert barycenter([d], [1.0]) == d
    assert barycenter([quantile_fn([0]), quantile_fn([2])], [0.5, 0.5]) == quantile_fn([1])
    with pytest.raises(InputError):
        barycenter([d, d], [1.0])


def test_barycenter_of_shifted_normals():
    from scipy.stats import norm

    q = (np.arange(2000) + 0.5) / 2000
    grid = np.arange(1, 2001) / 2000
    donors = [StepQuantileFn(grid, norm.ppf(q, m, 0.2)) for m in (-4, -2, 2, 4)]
    target = StepQuantileFn(grid, norm.ppf(q, 0, 0.2))
    assert w2_distance(barycenter(donors, [0.25] * 4), target) < 1e-12


@given(
    arrays(np.float64, st.integers(1, 40), elements=vals).flatmap(
        lambda a: st.tuples(st.just(a), arrays(np.float64, a.size, elements=vals))
    )
)
def test_equal_size_matches_sorted_pairing(xy):
    x, y = xy
    assert w2_distance(quantile_fn(x), quantile_fn(y)) == pytest.approx(sorted_pairing(x, y), abs=1e-12, rel=1e-12)


@given(st.lists(arrays(np.float64, st.integers(1, 15), elements=vals), min_size=3, max_size=3))
def test_metric_axioms(xs):
    a, b, c = (quantile_fn(x) for x in xs)
    assert w2_distance(a, b) == pytest.approx(w2_distance(b, a), abs=1e-12)
    assert w2_distance(a, a) == 0
    assert w2_distance(a, c) <= w2_distance(a, b) + w2_distance(b, c) + 1e-10


@given(arrays(np.float64, st.integers(1, 30), elements=vals), st.floats(-50, 50))
def test_translation(x, c):
    assert w2_distance(quantile_fn(x + c), quantile_fn(x)) == pytest.approx(abs(c), abs=1e-9)


@given(st.lists(arrays(np.float64, st.integers(1, 12), elements=vals), min_size=2, max_size=5), st.data())
def test_one_hot_and_pointwise(xs, data):
    donors = [quantile_fn(x) for x in xs]
    k = data.draw(st.integers(0, len(donors) - 1))
    e = np.zeros(len(donors))
    e[k] = 1
    assert barycenter(donors, e) == donors[k]
    w = np.random.default_rng(0).dirichlet(np.ones(len(donors)))
    bc = barycenter(donors, w)
    q = np.linspace(0.003, 1, 97)
    np.testing.assert_allclose(evaluate(bc, q), sum(wi * evaluate(d, q) for wi, d in zip(w, donors)), atol=1e-9)
    assert bc.is_monotone()
