"""
Synthetic panels for simulation studies and the metrics used to summarise them.

Gaussian-mixture panels: each donor is a 3-component mixture and the target
a 4-component mixture, with component means uniform on ``means_range`` and
variances uniform on ``var_range``. Binomial panels draw each unit's trial
count and success probability uniformly from configurable ranges. Unit
parameters are fixed across periods; every period gets fresh draws.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Literal, Mapping, Optional, Sequence

import numpy as np

from .errors import InputError
from .estimator import PanelDataset
from .quantile import EmpiricalSample, StepQuantileFn, evaluate
from .solver import FitConfig, fit_period

__all__ = [
    "SimSpec",
    "gen_gaussian_mixture_panel",
    "gen_binomial_panel",
    "gen_dirac_panel",
    "generate",
    "sparsity_metric",
    "hull_residual",
    "write_summary_csv",
    "write_quantile_grid_csv",
]

Family = Literal["gaussian_mixture", "binomial", "dirac"]


@dataclass(frozen=True)
class SimSpec:
    family: Family = "gaussian_mixture"
    J: int = 4
    n: int = 1000
    seed: int = 0
    T: int = 1
    t0: Optional[int] = None  # defaults to the last period
    means_range: tuple = (-10.0, 10.0)
    var_range: tuple = (0.5, 6.0)
    donor_components: int = 3
    target_components: int = 4
    trials_range: tuple = (5, 50)
    p_range: tuple = (0.1, 0.9)
    dirac_range: tuple = (-10.0, 10.0)

    def __post_init__(self):
        if self.family not in ("gaussian_mixture", "binomial", "dirac"):
            raise InputError(f"unknown family {self.family!r}")
        if self.J < 1 or self.n < 1 or self.T < 1:
            raise InputError("J, n and T must be at least 1")
        if self.t0 is not None and not 0 <= self.t0 < self.T:
            raise InputError("t0 must be one of the periods 0..T-1")
        for name in ("means_range", "var_range", "trials_range", "p_range", "dirac_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InputError(f"{name} must be (low, high) with low <= high")
        if self.var_range[0] <= 0:
            raise InputError("variances must be positive")
        if self.trials_range[0] < 1 or not 0 <= self.p_range[0] <= self.p_range[1] <= 1:
            raise InputError("invalid binomial ranges")
        if self.donor_components < 1 or self.target_components < 1:
            raise InputError("component counts must be at least 1")

    @property
    def last_pre(self) -> int:
        return self.T - 1 if self.t0 is None else self.t0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimSpec":
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**d)


def _check_family(spec: SimSpec, family: str):
    if spec.family != family:
        raise InputError(f"spec.family is {spec.family!r}, expected {family!r}")


def _panel(draw, spec: SimSpec) -> PanelDataset:
    """``draw(unit_index, rng)`` returns n values; unit 0 is the target."""
    rng = np.random.default_rng(spec.seed)
    units = tuple(range(spec.J + 1))
    periods = tuple(range(spec.T))
    cells = {}
    for u in units:
        for t in periods:
            cells[(u, t)] = EmpiricalSample.from_values(draw(u, rng), u, t)
    return PanelDataset(cells, 0, spec.last_pre, periods, units)


def _mixture(k: int, spec: SimSpec, rng):
    mu = rng.uniform(*spec.means_range, size=k)
    sd = np.sqrt(rng.uniform(*spec.var_range, size=k))
    w = rng.dirichlet(np.ones(k))
    return mu, sd, w


def gen_gaussian_mixture_panel(spec: SimSpec) -> PanelDataset:
    _check_family(spec, "gaussian_mixture")
    rng = np.random.default_rng(spec.seed)
    params = [_mixture(spec.target_components, spec, rng)]
    params += [_mixture(spec.donor_components, spec, rng) for _ in range(spec.J)]

    def draw(u, g):
        mu, sd, w = params[u]
        comp = g.choice(w.size, size=spec.n, p=w)
        return g.normal(mu[comp], sd[comp])

    return _panel(draw, SimSpec(**{**spec.to_dict(), "seed": spec.seed + 1}))


def gen_binomial_panel(spec: SimSpec) -> PanelDataset:
    _check_family(spec, "binomial")
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.trials_range
    trials = rng.integers(lo, hi + 1, size=spec.J + 1)
    p = rng.uniform(*spec.p_range, size=spec.J + 1)
    return _panel(
        lambda u, g: g.binomial(trials[u], p[u], size=spec.n).astype(float),
        SimSpec(**{**spec.to_dict(), "seed": spec.seed + 1}),
    )


def gen_dirac_panel(spec: SimSpec) -> PanelDataset:
    """Scalar panel: each cell holds ``n`` copies of one value."""
    _check_family(spec, "dirac")
    return _panel(lambda u, g: np.full(spec.n, g.uniform(*spec.dirac_range)), spec)


def generate(spec: SimSpec) -> PanelDataset:
    return {
        "gaussian_mixture": gen_gaussian_mixture_panel,
        "binomial": gen_binomial_panel,
        "dirac": gen_dirac_panel,
    }[spec.family](spec)


def sparsity_metric(weights, threshold: float = 1e-4) -> float:
    """Share of weights strictly above ``threshold``."""
    if not threshold > 0:
        raise InputError("threshold must be positive")
    lam = np.asarray(getattr(weights, "lam", weights), dtype=float)
    return float(np.mean(lam > threshold))


def hull_residual(target: StepQuantileFn, donors: Sequence[StepQuantileFn], config: FitConfig = FitConfig()) -> float:
    """Squared W2 distance from ``target`` to the convex hull of ``donors``."""
    return fit_period(target, donors, config).objective


def write_summary_csv(rows: Sequence[Mapping], path) -> None:
    """One row per replication; columns are the union of keys in first-seen order."""
    cols = list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})


def write_quantile_grid_csv(curves: Mapping[str, StepQuantileFn], path, grid=None) -> None:
    """Long table ``curve,q,value`` on a common probability grid."""
    q = np.linspace(0.005, 1.0, 200) if grid is None else np.asarray(grid, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "q", "value"])
        for name, f in curves.items():
            for qq, v in zip(q, np.atleast_1d(evaluate(f, q))):
                w.writerow([name, repr(float(qq)), repr(float(v))])
