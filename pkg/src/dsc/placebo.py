"""
Placebo permutation inference.

Every unit in turn plays the treated role, with all remaining units as
donors. The post-period squared W2 gap between each unit and its synthetic
counterpart is ranked; a treated unit whose gap stands out across the panel
gets a small permutation p-value.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DscError, InputError
from .estimator import DscResult, PanelDataset, fit_dsc
from .solver import FitConfig
from .wasserstein import w2_squared

__all__ = ["PlaceboReport", "placebo_test", "treated_rank", "all_ranks"]


def treated_rank(distances) -> int:
    """Rank of entry 0 in decreasing order, ties counted against it.

    ``#{iota : d_iota >= d_0}``, so a tie never improves significance.
    """
    d = np.asarray(distances, dtype=float)
    return int(np.sum(d >= d[0]))


def all_ranks(distances) -> np.ndarray:
    """Ranks 1..m in decreasing order; on ties entry 0 is placed last."""
    d = np.asarray(distances, dtype=float)
    key = np.arange(d.size) == 0
    order = np.lexsort((key, -d))
    r = np.empty(d.size, dtype=int)
    r[order] = np.arange(1, d.size + 1)
    return r


@dataclass(frozen=True, eq=False)
class PlaceboReport:
    """Gaps ``distances[i, k]`` for unit ``units[i]`` in post period ``periods[k]``.

    ``units[0]`` is the treated unit.
    """

    units: tuple
    periods: tuple
    distances: np.ndarray
    pre_fit: np.ndarray
    included: np.ndarray
    max_pre_fit: Optional[float] = None

    @property
    def n_units(self) -> int:
        return int(np.sum(self.included))

    @property
    def ranks(self) -> np.ndarray:
        """Treated rank per post period, over included units."""
        d = self.distances[self.included]
        return np.array([treated_rank(d[:, k]) for k in range(d.shape[1])], dtype=int)

    @property
    def p_values(self) -> np.ndarray:
        return self.ranks / self.n_units

    def rank_table(self) -> np.ndarray:
        d = self.distances[self.included]
        return np.column_stack([all_ranks(d[:, k]) for k in range(d.shape[1])])

    def to_dict(self) -> dict:
        return {
            "units": list(self.units),
            "periods": list(self.periods),
            "distances": self.distances.tolist(),
            "pre_fit": self.pre_fit.tolist(),
            "included": self.included.tolist(),
            "max_pre_fit": self.max_pre_fit,
            "ranks": self.ranks.tolist(),
            "p_values": self.p_values.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlaceboReport":
        return cls(
            tuple(d["units"]),
            tuple(d["periods"]),
            np.asarray(d["distances"], dtype=float).reshape(len(d["units"]), len(d["periods"])),
            np.asarray(d["pre_fit"], dtype=float),
            np.asarray(d["included"], dtype=bool),
            d.get("max_pre_fit"),
        )

    def write_gaps_csv(self, path) -> None:
        """Long table ``unit,period,w2_squared,treated`` for plotting."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["unit", "period", "w2_squared", "treated"])
            for i, u in enumerate(self.units):
                for k, t in enumerate(self.periods):
                    w.writerow([u, t, repr(float(self.distances[i, k])), int(i == 0)])


def _post_gaps(panel: PanelDataset, res: DscResult) -> np.ndarray:
    return np.array(
        [w2_squared(panel.qf(res.treated_unit, t), res.counterfactuals[t]) for t in panel.post_periods]
    )


def placebo_test(
    panel: PanelDataset,
    config: FitConfig = FitConfig(),
    time_weights=None,
    max_pre_fit: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> PlaceboReport:
    """Refit with every unit as target and rank the treated unit's post-period gap.

    ``max_pre_fit`` optionally drops placebo units whose mean pre-period
    objective exceeds it; the treated unit is always kept.
    """
    if panel.J < 1:
        raise InputError("placebo test needs at least one donor")
    if not panel.post_periods:
        raise InputError("placebo test needs at least one post-treatment period")

    def one(unit):
        try:
            res = fit_dsc(panel.with_treated(unit), config, time_weights)
        except DscError as e:
            raise type(e)(f"placebo unit {unit!r}: {e}") from e
        pre = float(np.mean(list(res.pre_fit_residuals.values())))
        return _post_gaps(panel, res), pre

    units = panel.units
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            out = list(ex.map(one, units))
    else:
        out = [one(u) for u in units]
    dist = np.vstack([d for d, _ in out])
    pre = np.array([p for _, p in out])
    keep = np.ones(len(units), dtype=bool)
    if max_pre_fit is not None:
        keep = pre <= max_pre_fit
        keep[0] = True
    return PlaceboReport(tuple(units), tuple(panel.post_periods), dist, pre, keep, max_pre_fit)
