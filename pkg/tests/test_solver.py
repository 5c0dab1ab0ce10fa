import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from dsc.errors import ComputationError, InputError
from dsc.quantile import StepQuantileFn, quantile_fn
from dsc.solver import (
    FitConfig,
    SimplexWeights,
    aggregate_weights,
    difference_design,
    fit_period,
    fit_period_mc,
    project_simplex,
    solve_simplex_ls,
)
from dsc.wasserstein import barycenter, w2_squared


def dirac(c):
    return StepQuantileFn.constant(c)


def random_qfs(rng, J, n=(5, 40)):
    return [quantile_fn(rng.normal(rng.uniform(-3, 3), rng.uniform(0.3, 2), rng.integers(*n))) for _ in range(J)]


def slsqp_objective(D):
    J = D.shape[1]
    G = D.T @ D
    res = minimize(
        lambda x: x @ G @ x,
        np.full(J, 1 / J),
        jac=lambda x: 2 * G @ x,
        bounds=[(0, 1)] * J,
        constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1}],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    return float(res.fun)


def test_examples():
    d = [dirac(0), dirac(10)]
    w = fit_period(dirac(2.5), d)
    np.testing.assert_allclose(w.lam, [0.75, 0.25], atol=1e-9)
    donors = [quantile_fn([0, 1, 5]), quantile_fn([2, 3, 3.5]), quantile_fn([-4, 0, 9])]
    w = fit_period(donors[1], donors)
    np.testing.assert_allclose(w.lam, [0, 1, 0], atol=1e-9)
    assert w.objective < 1e-18


def test_shifted_normals_min_norm_against_brute_force():
    from scipy.stats import norm

    K = 2000
    q = (np.arange(K) + 0.5) / K
    grid = np.arange(1, K + 1) / K
    donors = [StepQuantileFn(grid, norm.ppf(q, m, 0.2)) for m in (-4, -2, 2, 4)]
    target = StepQuantileFn(grid, norm.ppf(q, 0, 0.2))
    w = fit_period(target, donors)
    # brute force over the simplex at step 1/200
    D = difference_design(target, donors)
    G = D.T @ D
    s = 200
    a, b, c = np.meshgrid(*(np.arange(s + 1),) * 3, indexing="ij")
    ok = a + b + c <= s
    L = np.column_stack([a[ok], b[ok], c[ok], s - (a + b + c)[ok]]) / s
    obj = np.einsum("ij,jk,ik->i", L, G, L)
    best = L[obj <= obj.min() + 1e-12]
    oracle = best[np.argmin((best**2).sum(1))]
    np.testing.assert_allclose(oracle, [0.25] * 4)
    np.testing.assert_allclose(w.lam, oracle, atol=1e-6)
    assert np.sqrt(w2_squared(target, barycenter(donors, w))) < 1e-6


def test_mc_path():
    d = [dirac(0), dirac(10)]
    w = fit_period_mc(dirac(2.5), d, FitConfig(mc_samples=100_000))
    assert abs(w.lam[1] - 0.25) < 0.01
    one = fit_period_mc(quantile_fn([1, 2]), [quantile_fn([0, 4]), quantile_fn([3])], FitConfig(mc_samples=1))
    assert isinstance(one, SimplexWeights) and abs(one.lam.sum() - 1) < 1e-9
    rng = np.random.default_rng(3)
    donors = random_qfs(rng, 3, (200, 300))
    target = barycenter(donors, [0.2, 0.3, 0.5])
    cfg = FitConfig(mc_samples=100_000, seed=5)
    assert fit_period_mc(target, donors, cfg) == fit_period_mc(target, donors, cfg)
    assert np.max(np.abs(fit_period_mc(target, donors, cfg).lam - fit_period(target, donors).lam)) < 0.01


def test_aggregate():
    a = SimplexWeights([1.0, 0.0], objective=0.0)
    b = SimplexWeights([0.0, 1.0], objective=2.0)
    np.testing.assert_allclose(aggregate_weights([a]).lam, [1, 0])
    agg = aggregate_weights([a, b], [0.5, 0.5])
    np.testing.assert_allclose(agg.lam, [0.5, 0.5])
    assert agg.objective == 1.0
    rng = np.random.default_rng(0)
    ws = [SimplexWeights(rng.dirichlet(np.ones(4))) for _ in range(3)]
    np.testing.assert_allclose(aggregate_weights(ws).lam, np.mean([w.lam for w in ws], axis=0), atol=1e-15)
    with pytest.raises(InputError):
        aggregate_weights([a, b], [1.0])
    with pytest.raises(InputError):
        aggregate_weights([a, b], [0.7, 0.7])


def test_errors_and_validation():
    with pytest.raises(InputError):
        fit_period(dirac(1), [])
    with pytest.raises(ComputationError, match="degenerate quantile input"):
        solve_simplex_ls(np.array([[np.nan, 1.0]]))
    with pytest.raises(InputError):
        SimplexWeights([0.5, 0.6])
    with pytest.raises(InputError):
        SimplexWeights([1.5, -0.5])
    assert SimplexWeights([1.5, -0.5], mode="sum_to_one").extrapolation
    with pytest.raises(InputError):
        FitConfig(mode="bogus")
    w = SimplexWeights([1 + 1e-13, -1e-13])
    assert w.lam.min() == 0.0


def test_sum_to_one_extrapolates():
    # target outside the hull: only negative weights reach it
    d = [dirac(0), dirac(1)]
    w = fit_period(dirac(3), d, FitConfig(mode="sum_to_one"))
    np.testing.assert_allclose(w.lam, [-2, 3], atol=1e-8)
    assert w.objective < 1e-12
    s = fit_period(dirac(3), d)
    np.testing.assert_allclose(s.lam, [0, 1], atol=1e-12)


def test_cap_returns_best_iterate():
    rng = np.random.default_rng(1)
    donors = random_qfs(rng, 8)
    w = fit_period(quantile_fn(rng.normal(size=20)), donors, FitConfig(max_iterations=1))
    assert abs(w.lam.sum() - 1) < 1e-9 and w.lam.min() >= 0


def test_config_round_trip():
    c = FitConfig(mode="sum_to_one", ridge=0.0, max_iterations=7, seed=None)
    assert FitConfig.from_dict(c.to_dict()) == c
    w = fit_period(dirac(2.5), [dirac(0), dirac(10)])
    assert SimplexWeights.from_dict(w.to_dict()) == w


@given(st.integers(0, 10_000), st.integers(1, 7))
def test_objective_matches_independent_qp(seed, J):
    rng = np.random.default_rng(seed)
    donors = random_qfs(rng, J)
    target = quantile_fn(rng.normal(0, 1, rng.integers(5, 40)))
    w = fit_period(target, donors)
    D = difference_design(target, donors)
    ref = slsqp_objective(D)
    assert w.objective <= ref + 1e-9 * max(1.0, ref)
    assert w.objective == pytest.approx(w2_squared(target, barycenter(donors, w)), rel=1e-9, abs=1e-12)
    # never worse than any single donor
    for f in donors:
        assert w.objective <= w2_squared(target, f) + 1e-9


@given(st.integers(0, 10_000), st.floats(0.1, 10), st.floats(-50, 50))
def test_affine_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    xs = [rng.normal(rng.uniform(-3, 3), rng.uniform(0.3, 2), rng.integers(5, 30)) for _ in range(rng.integers(2, 6))]
    t = rng.normal(0, 1, 17)
    w0 = fit_period(quantile_fn(t), [quantile_fn(x) for x in xs])
    w1 = fit_period(quantile_fn(a * t + b), [quantile_fn(a * x + b) for x in xs])
    np.testing.assert_allclose(w1.lam, w0.lam, atol=1e-6)


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_projection_is_nearest_simplex_point(seed, J):
    rng = np.random.default_rng(seed)
    v = rng.normal(0, 3, J)
    p = project_simplex(v)
    assert p.min() >= 0 and abs(p.sum() - 1) < 1e-12
    for _ in range(20):
        z = rng.dirichlet(np.ones(J))
        assert np.sum((v - p) ** 2) <= np.sum((v - z) ** 2) + 1e-12


@given(st.integers(0, 10_000))
def test_duplicate_donors_split_evenly(seed):
    # identical donors give a non-unique optimum; min-norm splits the mass
    rng = np.random.default_rng(seed)
    f = quantile_fn(rng.normal(size=12))
    g = quantile_fn(rng.normal(5, 1, 12))
    w = fit_period(f, [f, f, g])
    np.testing.assert_allclose(w.lam, [0.5, 0.5, 0.0], atol=1e-8)
