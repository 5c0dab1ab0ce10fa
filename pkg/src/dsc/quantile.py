"""
Empirical quantile functions and the distributional functionals built on them.

A quantile function is stored as a left-continuous step function: on the
interval ``(b[k-1], b[k]]`` (with ``b[-1] = 0``) it takes the level
``values[k]``. Every integral below is computed in closed form from that
representation, so nothing is sampled or interpolated.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Hashable, Union

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "EmpiricalSample",
    "StepQuantileFn",
    "quantile_fn",
    "evaluate",
    "mean",
    "quantile_effect",
    "lorenz",
    "gini",
    "interquartile_range",
    "integrated_quantile",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Sorted draws for one (unit, period) cell."""

    values: np.ndarray
    unit_id: Hashable = None
    period: Hashable = None

    def __post_init__(self):
        v = _frozen(np.ravel(self.values))
        if v.size == 0:
            raise InputError("empty sample")
        if not np.all(np.isfinite(v)):
            raise InputError(f"non-finite value in sample ({self.unit_id!r}, {self.period!r})")
        if np.any(np.diff(v) < 0):
            raise InputError("sample values must be sorted; use EmpiricalSample.from_values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values, unit_id=None, period=None) -> "EmpiricalSample":
        return cls(np.sort(np.asarray(values, dtype=float).ravel()), unit_id, period)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, EmpiricalSample):
            return NotImplemented
        return (
            self.unit_id == other.unit_id
            and self.period == other.period
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class StepQuantileFn:
    """Left-continuous piecewise-constant function on (0, 1].

    Not necessarily monotone: linear combinations with negative weights are
    allowed and stay in this type.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    _lefts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = _frozen(np.ravel(self.breakpoints))
        v = _frozen(np.ravel(self.values))
        if b.size == 0 or b.size != v.size:
            raise InputError("breakpoints and values must be non-empty and of equal length")
        if b[-1] != 1.0:
            raise InputError("final breakpoint must be exactly 1")
        if b[0] <= 0.0 or np.any(np.diff(b) <= 0):
            raise InputError("breakpoints must be strictly increasing in (0, 1]")
        if not np.all(np.isfinite(v)):
            raise InputError("quantile levels must be finite")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_lefts", _frozen(np.concatenate(([0.0], b[:-1]))))

    @property
    def widths(self) -> np.ndarray:
        return self.breakpoints - self._lefts

    def __call__(self, q):
        return evaluate(self, q)

    def __len__(self):
        return self.breakpoints.size

    def __eq__(self, other):
        if not isinstance(other, StepQuantileFn):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def compressed(self) -> "StepQuantileFn":
        """Same function with equal adjacent levels merged."""
        keep = np.append(self.values[1:] != self.values[:-1], True)
        if keep.all():
            return self
        return StepQuantileFn(self.breakpoints[keep], self.values[keep])

    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Locations in (0, 1) where the level changes, and the signed jump sizes."""
        f = self.compressed()
        return f.breakpoints[:-1].copy(), np.diff(f.values)

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "StepQuantileFn":
        return cls(np.asarray(d["breakpoints"], float), np.asarray(d["values"], float))

    @classmethod
    def constant(cls, c: float) -> "StepQuantileFn":
        return cls(np.array([1.0]), np.array([float(c)]))


SampleLike = Union[EmpiricalSample, np.ndarray, list, tuple]


def quantile_fn(sample: SampleLike) -> StepQuantileFn:
    """Empirical quantile function ``inf{x : F_n(x) >= q}``.

    The i-th order statistic is returned on ``((i-1)/n, i/n]``. Ties are kept
    as repeated order statistics and then merged, which leaves evaluation
    unchanged.
    """
    if isinstance(sample, EmpiricalSample):
        x = sample.values
    else:
        x = np.sort(np.asarray(sample, dtype=float).ravel())
        if x.size == 0:
            raise InputError("empty sample")
        if not np.all(np.isfinite(x)):
            raise InputError("non-finite value in sample")
    n = x.size
    b = np.arange(1, n + 1) / n
    return StepQuantileFn(b, x).compressed()


def _check_prob(q):
    q = np.asarray(q, dtype=float)
    if np.any(~(q > 0.0)) or np.any(q > 1.0):
        raise DomainError(f"probability must lie in (0, 1], got {q if q.ndim == 0 else 'array'}")
    return q


def evaluate(qf: StepQuantileFn, q):
    """Value of ``qf`` at ``q``; a breakpoint takes the level of the interval it closes."""
    qa = _check_prob(q)
    idx = np.searchsorted(qf.breakpoints, qa, side="left")
    out = qf.values[idx]
    return float(out) if out.ndim == 0 else out


def mean(qf: StepQuantileFn) -> float:
    return float(np.dot(qf.values, qf.widths))


def integrated_quantile(qf: StepQuantileFn, q) -> float:
    """Exact ``int_0^q qf(s) ds``."""
    q = float(_check_prob(q))
    b, v = qf.breakpoints, qf.values
    k = int(np.searchsorted(b, q, side="left"))
    full = float(np.dot(v[:k], qf.widths[:k]))
    left = 0.0 if k == 0 else b[k - 1]
    return full + v[k] * (q - left)


def _cumulative_integrals(qf: StepQuantileFn) -> np.ndarray:
    """``int_0^{b_k} qf`` at every breakpoint, with a leading 0."""
    return np.concatenate(([0.0], np.cumsum(qf.values * qf.widths)))


def quantile_effect(observed: StepQuantileFn, counterfactual: StepQuantileFn, q):
    return evaluate(observed, q) - evaluate(counterfactual, q)


def _lorenz_denominator(qf: StepQuantileFn) -> float:
    m = mean(qf)
    if m == 0.0:
        raise InputError("degenerate Lorenz denominator")
    if np.any(qf.values < 0):
        warnings.warn(
            "Lorenz curve of a quantile function with negative levels is hard to interpret",
            RuntimeWarning,
            stacklevel=3,
        )
    return m


def lorenz(qf: StepQuantileFn, q) -> float:
    m = _lorenz_denominator(qf)
    if float(q) == 1.0:
        return 1.0
    return integrated_quantile(qf, q) / m


def gini(qf: StepQuantileFn) -> float:
    """``1 - 2 * int_0^1 L(q) dq`` with the Lorenz curve integrated exactly.

    On each interval the partial integral is linear in q, so the area under
    it is a trapezoid.
    """
    m = _lorenz_denominator(qf)
    cum = _cumulative_integrals(qf)
    w = qf.widths
    area = np.sum(w * (cum[:-1] + cum[1:]) / 2.0)
    return float(1.0 - 2.0 * area / m)


def interquartile_range(qf: StepQuantileFn) -> float:
    return evaluate(qf, 0.75) - evaluate(qf, 0.25)
