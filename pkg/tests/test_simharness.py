import numpy as np
import pytest

from dsc.errors import InputError
from dsc.estimator import fit_dsc
from dsc.quantile import quantile_fn
from dsc.simharness import (
    SimSpec,
    gen_binomial_panel,
    gen_dirac_panel,
    gen_gaussian_mixture_panel,
    hull_residual,
    sparsity_metric,
    write_quantile_grid_csv,
    write_summary_csv,
)


def test_gaussian_mixture_reproducible():
    s = SimSpec(J=5, n=200, seed=4, T=2)
    a, b = gen_gaussian_mixture_panel(s), gen_gaussian_mixture_panel(s)
    assert a.samples == b.samples
    assert all(x.n == 200 and np.all(np.isfinite(x.values)) for x in a.samples.values())
    c = gen_gaussian_mixture_panel(SimSpec(J=5, n=200, seed=5, T=2))
    assert c.units == a.units and c.periods == a.periods
    assert c.samples[(0, 0)] != a.samples[(0, 0)]


def test_binomial_integers():
    p = gen_binomial_panel(SimSpec(family="binomial", J=3, n=100, seed=1))
    for s in p.samples.values():
        assert np.all(s.values == np.round(s.values)) and s.values.min() >= 0
    assert gen_binomial_panel(SimSpec(family="binomial", J=3, n=100, seed=1)).samples == p.samples
    with pytest.raises(InputError):
        gen_binomial_panel(SimSpec(J=3))


def test_spec_validation():
    with pytest.raises(InputError):
        SimSpec(J=0)
    with pytest.raises(InputError):
        SimSpec(var_range=(0.0, 1.0))
    with pytest.raises(InputError):
        SimSpec(family="poisson")
    s = SimSpec(J=2, means_range=(-1.0, 1.0))
    assert SimSpec.from_dict(s.to_dict()) == s


def test_sparsity_examples():
    e = np.zeros(10)
    e[3] = 1
    assert sparsity_metric(e) == 0.1
    assert sparsity_metric(np.full(10, 0.1)) == 1.0
    with pytest.raises(InputError):
        sparsity_metric(e, 0.0)


def test_hull_residual_examples():
    d = [quantile_fn([0.0]), quantile_fn([1.0])]
    assert hull_residual(quantile_fn([100.0]), d) == pytest.approx(9801.0, rel=1e-12)
    f = quantile_fn([1.0, 2.0, 4.0])
    assert hull_residual(f, [f, quantile_fn([7.0, 8.0])]) < 1e-15


def test_hull_residual_monotone_in_donor_set():
    g = np.random.default_rng(0)
    donors = [quantile_fn(g.binomial(g.integers(5, 30), g.uniform(0.1, 0.9), 300)) for _ in range(8)]
    target = quantile_fn(g.binomial(20, 0.5, 300))
    res = [hull_residual(target, donors[:k]) for k in range(1, 9)]
    assert all(b <= a + 1e-10 for a, b in zip(res, res[1:]))


def test_bracketing_donor_reduces_residual():
    target = quantile_fn(np.random.default_rng(0).binomial(20, 0.5, 500))
    low = [quantile_fn(np.random.default_rng(1).binomial(20, 0.2, 500))]
    high = quantile_fn(np.random.default_rng(2).binomial(20, 0.8, 500))
    assert hull_residual(target, low + [high]) < hull_residual(target, low)


def test_more_donors_fit_better():
    small = gen_gaussian_mixture_panel(SimSpec(J=4, n=500, seed=0))
    big = gen_gaussian_mixture_panel(SimSpec(J=200, n=500, seed=0))
    # the target and first donors share parameters, so the donor sets are nested
    assert fit_dsc(big).weights.objective < fit_dsc(small).weights.objective
    bsmall = gen_binomial_panel(SimSpec(family="binomial", J=3, n=500, seed=0))
    bbig = gen_binomial_panel(SimSpec(family="binomial", J=300, n=500, seed=0))
    assert fit_dsc(bbig).weights.objective < fit_dsc(bsmall).weights.objective


def test_dirac_panel_is_scalar():
    p = gen_dirac_panel(SimSpec(family="dirac", J=3, n=4, T=3))
    assert all(np.ptp(s.values) == 0 for s in p.samples.values())


def test_csv_emitters(tmp_path):
    write_summary_csv([{"J": 4, "sparsity": 0.25}, {"J": 8, "sparsity": 0.125, "extra": 1}], tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "J,sparsity,extra" and lines[2] == "8,0.125,1"
    write_quantile_grid_csv({"a": quantile_fn([1.0, 2.0])}, tmp_path / "g.csv", grid=[0.5, 1.0])
    assert (tmp_path / "g.csv").read_text().splitlines() == ["curve,q,value", "a,0.5,1.0", "a,1.0,2.0"]
