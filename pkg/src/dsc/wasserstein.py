"""
2-Wasserstein geometry on the real line.

On the line the W2 distance is the L2 distance between quantile functions and
the barycenter is the weighted average of quantile functions. Both are exact
here: step functions are put on the union of their breakpoints, after which
every integral is a finite sum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .quantile import StepQuantileFn

__all__ = ["MergedGrid", "merged_grid", "values_on_grid", "w2_squared", "w2_distance", "barycenter"]


@dataclass(frozen=True, eq=False)
class MergedGrid:
    breakpoints: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints, prepend=0.0)

    def __len__(self):
        return self.breakpoints.size


def merged_grid(qfs: Sequence[StepQuantileFn]) -> MergedGrid:
    if len(qfs) == 0:
        raise InputError("need at least one quantile function")
    if len(qfs) == 1:
        return MergedGrid(qfs[0].breakpoints)
    first = qfs[0].breakpoints
    if all(f.breakpoints is first or np.array_equal(f.breakpoints, first) for f in qfs[1:]):
        return MergedGrid(first)
    return MergedGrid(np.unique(np.concatenate([f.breakpoints for f in qfs])))


def values_on_grid(qf: StepQuantileFn, grid: MergedGrid) -> np.ndarray:
    """Level of ``qf`` on each interval of ``grid`` (grid must refine ``qf``)."""
    if qf.breakpoints.size == grid.breakpoints.size:
        return qf.values
    idx = np.searchsorted(qf.breakpoints, grid.breakpoints, side="left")
    return qf.values[idx]


def w2_squared(a: StepQuantileFn, b: StepQuantileFn) -> float:
    g = merged_grid([a, b])
    d = values_on_grid(a, g) - values_on_grid(b, g)
    return float(np.dot(d * d, g.widths))


def w2_distance(a: StepQuantileFn, b: StepQuantileFn) -> float:
    return float(np.sqrt(w2_squared(a, b)))


def barycenter(donors: Sequence[StepQuantileFn], weights) -> StepQuantileFn:
    """Pointwise weighted sum of quantile functions.

    ``weights`` may be a plain vector or anything with a ``lam`` attribute
    (``SimplexWeights``).
    """
    lam = np.asarray(getattr(weights, "lam", weights), dtype=float).ravel()
    if len(donors) == 0 or lam.size != len(donors):
        raise InputError(f"got {len(donors)} donors but {lam.size} weights")
    active = np.flatnonzero(lam != 0.0)
    if active.size == 0:
        return StepQuantileFn.constant(0.0)
    used = [donors[j] for j in active]
    g = merged_grid(used)
    vals = np.zeros(len(g))
    for j, f in zip(active, used):
        vals += lam[j] * values_on_grid(f, g)
    return StepQuantileFn(g.breakpoints, vals).compressed()
