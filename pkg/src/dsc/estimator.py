"""
End-to-end distributional synthetic controls.

Pre-treatment periods: fit weights period by period and average them over
time. Post-treatment periods: the counterfactual quantile function of the
treated unit is the barycenter of the donors with those averaged weights.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import DscError, InputError
from .quantile import (
    EmpiricalSample,
    StepQuantileFn,
    evaluate,
    lorenz,
    mean,
    quantile_fn,
)
from .solver import FitConfig, SimplexWeights, aggregate_weights, fit_period, project_simplex
from .wasserstein import barycenter

__all__ = [
    "PanelDataset",
    "DscResult",
    "fit_dsc",
    "att",
    "effect_curves",
    "ClassicalScResult",
    "classical_sc",
    "scalar_sc_weights",
]


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Balanced panel of outcome samples, one per (unit, period).

    ``units`` lists the treated unit first, then the donors in a fixed order.
    ``periods`` is ordered; every period up to and including ``t0`` is a
    pre-treatment period.
    """

    samples: Mapping[tuple, EmpiricalSample]
    treated_unit: Hashable
    t0: Hashable
    periods: tuple
    units: tuple

    def __post_init__(self):
        units = tuple(self.units)
        periods = tuple(self.periods)
        if len(units) < 2:
            raise InputError("need a treated unit and at least one donor")
        if len(set(units)) != len(units) or len(set(periods)) != len(periods):
            raise InputError("duplicate unit or period labels")
        if units[0] != self.treated_unit:
            if self.treated_unit not in units:
                raise InputError(f"treated unit {self.treated_unit!r} not in panel")
            units = (self.treated_unit,) + tuple(u for u in units if u != self.treated_unit)
        if self.t0 not in periods:
            raise InputError(f"t0={self.t0!r} is not one of the periods")
        missing = [(u, t) for u in units for t in periods if (u, t) not in self.samples]
        if missing:
            shown = ", ".join(map(str, missing[:10]))
            raise InputError(f"missing cells (unit, period): {shown}" + (" ..." if len(missing) > 10 else ""))
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "samples", dict(self.samples))

    @classmethod
    def from_cells(
        cls,
        cells: Mapping[tuple, Sequence[float]],
        treated_unit,
        t0,
        units: Optional[Sequence] = None,
        periods: Optional[Sequence] = None,
    ) -> "PanelDataset":
        """Build from raw (unsorted) values keyed by ``(unit, period)``."""
        if units is None:
            units = list(dict.fromkeys(u for u, _ in cells))
        if periods is None:
            periods = sorted(dict.fromkeys(t for _, t in cells))
        samples = {
            (u, t): EmpiricalSample.from_values(v, u, t) for (u, t), v in cells.items()
        }
        return cls(samples, treated_unit, t0, tuple(periods), tuple(units))

    @property
    def donors(self) -> tuple:
        return self.units[1:]

    @property
    def J(self) -> int:
        return len(self.units) - 1

    @property
    def pre_periods(self) -> tuple:
        return self.periods[: self.periods.index(self.t0) + 1]

    @property
    def post_periods(self) -> tuple:
        return self.periods[self.periods.index(self.t0) + 1 :]

    def is_post(self, period) -> bool:
        if period not in self.periods:
            raise InputError(f"unknown period {period!r}")
        return self.periods.index(period) > self.periods.index(self.t0)

    def sample(self, unit, period) -> EmpiricalSample:
        return self.samples[(unit, period)]

    @cached_property
    def _qfs(self) -> dict:
        return {k: quantile_fn(s) for k, s in self.samples.items()}

    def qf(self, unit, period) -> StepQuantileFn:
        return self._qfs[(unit, period)]

    def with_treated(self, unit) -> "PanelDataset":
        """Same data with ``unit`` as the target and everyone else as donors."""
        rest = tuple(u for u in self.units if u != unit)
        return PanelDataset(self.samples, unit, self.t0, self.periods, (unit,) + rest)

    def replace_samples(self, samples: Mapping[tuple, EmpiricalSample]) -> "PanelDataset":
        new = dict(self.samples)
        new.update(samples)
        return PanelDataset(new, self.treated_unit, self.t0, self.periods, self.units)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (u, t, x)
            for u in self.units
            for t in self.periods
            for x in self.samples[(u, t)].values
        ]
        return pd.DataFrame(rows, columns=["unit", "period", "value"])


@dataclass(frozen=True, eq=False)
class DscResult:
    treated_unit: Hashable
    donors: tuple
    t0: Hashable
    weights: SimplexWeights
    per_period_weights: dict
    counterfactuals: dict
    pre_fit_residuals: dict
    time_weights: tuple = ()
    config: FitConfig = field(default_factory=FitConfig)

    @property
    def lam(self) -> np.ndarray:
        return self.weights.lam

    def weight_table(self) -> dict:
        return dict(zip(self.donors, self.weights.lam.tolist()))

    def to_dict(self) -> dict:
        return {
            "treated_unit": self.treated_unit,
            "donors": list(self.donors),
            "t0": self.t0,
            "weights": self.weights.to_dict(),
            "per_period_weights": [[t, w.to_dict()] for t, w in self.per_period_weights.items()],
            "counterfactuals": [[t, f.to_dict()] for t, f in self.counterfactuals.items()],
            "pre_fit_residuals": [[t, r] for t, r in self.pre_fit_residuals.items()],
            "time_weights": list(self.time_weights),
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DscResult":
        return cls(
            d["treated_unit"],
            tuple(d["donors"]),
            d["t0"],
            SimplexWeights.from_dict(d["weights"]),
            {t: SimplexWeights.from_dict(w) for t, w in d["per_period_weights"]},
            {t: StepQuantileFn.from_dict(f) for t, f in d["counterfactuals"]},
            {t: float(r) for t, r in d["pre_fit_residuals"]},
            tuple(d.get("time_weights", ())),
            FitConfig.from_dict(d.get("config", {})),
        )


def _map(fn, items, max_workers):
    if max_workers and max_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def fit_dsc(
    panel: PanelDataset,
    config: FitConfig = FitConfig(),
    time_weights=None,
    max_workers: Optional[int] = None,
) -> DscResult:
    pre = panel.pre_periods
    tw = np.full(len(pre), 1.0 / len(pre)) if time_weights is None else np.asarray(time_weights, float)
    if tw.size != len(pre):
        raise InputError(f"{tw.size} time weights for {len(pre)} pre-treatment periods")

    def fit_one(t):
        target = panel.qf(panel.treated_unit, t)
        donors = [panel.qf(u, t) for u in panel.donors]
        try:
            return fit_period(target, donors, config)
        except DscError as e:
            raise type(e)(f"period {t!r}: {e}") from e

    per = _map(fit_one, list(pre), max_workers)
    lam = aggregate_weights(per, tw)
    cf = {
        t: barycenter([panel.qf(u, t) for u in panel.donors], lam) for t in panel.post_periods
    }
    return DscResult(
        treated_unit=panel.treated_unit,
        donors=panel.donors,
        t0=panel.t0,
        weights=lam,
        per_period_weights=dict(zip(pre, per)),
        counterfactuals=cf,
        pre_fit_residuals={t: w.objective for t, w in zip(pre, per)},
        time_weights=tuple(tw.tolist()),
        config=config,
    )


def _post_check(panel: PanelDataset, period):
    if not panel.is_post(period):
        raise InputError("ATT defined post-treatment only")


def att(result: DscResult, panel: PanelDataset, period) -> float:
    _post_check(panel, period)
    return mean(panel.qf(result.treated_unit, period)) - mean(result.counterfactuals[period])


def _lorenz_or_nan(qf: StepQuantileFn, q) -> np.ndarray:
    """Lorenz curve on ``q``; all NaN when the mean is zero."""
    try:
        return np.array([lorenz(qf, x) for x in q])
    except InputError:
        return np.full(len(q), np.nan)


def effect_curves(result: DscResult, panel: PanelDataset, period, grid) -> pd.DataFrame:
    """Observed and counterfactual quantiles, their difference and both Lorenz curves on ``grid``."""
    _post_check(panel, period)
    obs = panel.qf(result.treated_unit, period)
    cf = result.counterfactuals[period]
    q = np.asarray(grid, dtype=float).ravel()
    yo = np.atleast_1d(evaluate(obs, q))
    yc = np.atleast_1d(evaluate(cf, q))
    return pd.DataFrame(
        {
            "q": q,
            "observed": yo,
            "counterfactual": yc,
            "quantile_effect": yo - yc,
            "lorenz_obs": _lorenz_or_nan(obs, q),
            "lorenz_cf": _lorenz_or_nan(cf, q),
        }
    )


# ---------------------------------------------------------------------------
# classical (scalar) synthetic controls


def scalar_sc_weights(target: float, donors) -> np.ndarray:
    """Min-norm minimiser of ``(sum_j lam_j y_j - y_0)^2`` over the simplex.

    Written independently of the general solver. With ``d = y - y_0`` the
    optimal set is ``{lam : lam.d = 0}`` when 0 lies in ``[min d, max d]``;
    its min-norm point is the simplex projection of ``beta * d`` for the
    ``beta`` making ``lam.d`` vanish (``beta -> lam.d`` is monotone). Outside
    the hull the closest donor(s) share the weight equally.
    """
    d = np.asarray(donors, dtype=float).ravel() - float(target)
    J = d.size
    if J == 0:
        raise InputError("need at least one donor")
    if d.min() > 0 or d.max() < 0:
        close = np.abs(d) == np.abs(d).min()
        return close / close.sum()
    if np.all(d == 0):
        return np.full(J, 1.0 / J)

    def g(beta):
        return project_simplex(beta * d) @ d

    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo *= 2.0
    while g(hi) < 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    beta = 0.5 * (lo + hi)
    lam = project_simplex(beta * d)
    # on a fixed support the KKT system is linear in (alpha, beta): solve it exactly
    S = lam > 0
    if S.sum() >= 2:
        M = np.array([[S.sum(), d[S].sum()], [d[S].sum(), d[S] @ d[S]]])
        try:
            alpha, beta_s = np.linalg.solve(M, [1.0, 0.0])
            cand = np.where(S, alpha + beta_s * d, 0.0)
            if np.all(cand[S] >= 0):
                lam = cand
        except np.linalg.LinAlgError:
            pass
    return lam / lam.sum()


@dataclass(frozen=True)
class ClassicalScResult:
    treated_unit: Hashable
    donors: tuple
    weights: np.ndarray
    per_period_weights: dict
    predictions: dict


def classical_sc(
    aggregates: Mapping[tuple, float],
    t0,
    treated_unit,
    donors: Optional[Sequence] = None,
    periods: Optional[Sequence] = None,
    time_weights=None,
) -> ClassicalScResult:
    """Scalar synthetic controls on aggregate outcomes (no covariates)."""
    if donors is None:
        donors = [u for u in dict.fromkeys(u for u, _ in aggregates) if u != treated_unit]
    if periods is None:
        periods = sorted(dict.fromkeys(t for _, t in aggregates))
    periods = list(periods)
    missing = [(u, t) for u in [treated_unit, *donors] for t in periods if (u, t) not in aggregates]
    if missing:
        raise InputError(f"missing cells (unit, period): {missing[:10]}")
    pre = periods[: periods.index(t0) + 1]
    per = {
        t: scalar_sc_weights(aggregates[(treated_unit, t)], [aggregates[(u, t)] for u in donors])
        for t in pre
    }
    tw = np.full(len(pre), 1.0 / len(pre)) if time_weights is None else np.asarray(time_weights, float)
    lam = np.sum([w * per[t] for w, t in zip(tw, pre)], axis=0)
    preds = {t: float(sum(l * aggregates[(u, t)] for l, u in zip(lam, donors))) for t in periods}
    return ClassicalScResult(treated_unit, tuple(donors), lam, per, preds)
