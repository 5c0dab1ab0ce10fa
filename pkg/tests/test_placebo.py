import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dsc.errors import InputError
from dsc.estimator import PanelDataset, fit_dsc
from dsc.placebo import PlaceboReport, all_ranks, placebo_test, treated_rank
from dsc.wasserstein import w2_squared

from conftest import make_panel


def effect_panel(effect=5.0, J=4, n=300, T=3, t0=1, seed=0):
    g = np.random.default_rng(seed)
    mu = np.r_[0.0, g.uniform(-2, 2, J)]
    cells = {}
    for u in range(J + 1):
        for t in range(T):
            bump = effect if (u == 0 and t > t0) else 0.0
            cells[(u, t)] = g.normal(mu[u] + 0.3 * t + bump, 1, n)
    return make_panel(cells, 0, t0)


def test_rank_helpers():
    assert treated_rank([5, 1, 2, 3]) == 1
    assert treated_rank([0, 1, 2, 3]) == 4
    assert treated_rank([2, 2, 1]) == 2  # ties count against the treated unit
    np.testing.assert_array_equal(all_ranks([2, 2, 1]), [2, 1, 3])
    np.testing.assert_array_equal(all_ranks([3, 1, 2]), [1, 3, 2])


def test_largest_gap_gives_smallest_p():
    p = effect_panel()
    rep = placebo_test(p)
    assert rep.distances.shape == (5, 1)
    assert rep.ranks.tolist() == [1]
    assert rep.p_values.tolist() == [0.2]
    assert np.all(rep.distances >= 0)
    np.testing.assert_array_equal(np.sort(rep.rank_table()[:, 0]), np.arange(1, 6))


def test_treated_fit_matches_fit_dsc():
    p = effect_panel(T=4)
    rep = placebo_test(p)
    r = fit_dsc(p)
    for k, t in enumerate(p.post_periods):
        assert rep.distances[0, k] == w2_squared(p.qf(0, t), r.counterfactuals[t])


def test_zero_gap_gives_p_one():
    p = effect_panel(effect=0.0)
    r = fit_dsc(p)
    samples = dict(p.samples)
    # replace the treated post outcome by its own counterfactual draws
    cf = r.counterfactuals[2]
    draws = np.repeat(cf.values, np.round(np.diff(cf.breakpoints, prepend=0) * 10_000).astype(int))
    from dsc.quantile import EmpiricalSample

    samples[(0, 2)] = EmpiricalSample.from_values(draws, 0, 2)
    p2 = p.replace_samples(samples)
    rep = placebo_test(p2)
    assert rep.distances[0, 0] < 1e-6
    assert rep.p_values[0] == 1.0


def test_donor_order_irrelevant():
    p = effect_panel(effect=0.5, seed=3)
    q = PanelDataset(p.samples, 0, p.t0, p.periods, (0, 4, 2, 3, 1))
    assert placebo_test(p).p_values.tolist() == placebo_test(q).p_values.tolist()


def test_pre_fit_filter_and_round_trip():
    p = effect_panel(seed=2)
    rep = placebo_test(p, max_pre_fit=-1.0)  # drops every placebo unit
    assert rep.n_units == 1 and rep.p_values.tolist() == [1.0]
    full = placebo_test(p)
    back = PlaceboReport.from_dict(full.to_dict())
    np.testing.assert_array_equal(back.distances, full.distances)
    assert back.p_values.tolist() == full.p_values.tolist()


def test_needs_post_period():
    p = effect_panel(T=2, t0=1)
    with pytest.raises(InputError):
        placebo_test(p)


@given(st.lists(st.floats(0, 10), min_size=2, max_size=12))
def test_p_value_support(d):
    r = treated_rank(d)
    assert 1 <= r <= len(d)
    ranks = all_ranks(d)
    assert sorted(ranks) == list(range(1, len(d) + 1))
    assert ranks[0] == r
