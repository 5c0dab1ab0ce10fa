"""
Constrained quantile-on-quantile regression.

For a target quantile function ``F_0`` and donors ``F_1..F_J`` the weights
minimise ``int_0^1 (sum_j lam_j F_j(q) - F_0(q))^2 dq`` over the unit simplex
(or over the affine set ``sum(lam) = 1`` in extrapolation mode).

Because the weights sum to one the residual equals ``sum_j lam_j (F_j - F_0)``,
so the problem is a least-squares problem in the donor-minus-target
differences. Working with that matrix (rather than the raw Gram matrix) makes
the fit exactly invariant to a common affine change of units, and it is
rescaled to unit average column norm before solving so tolerances and the
ridge are scale free.

The solve has two stages:

1. a primal active-set method (Lawson-Hanson style, with the sum-to-one
   constraint handled in the null space of ``1``) on the ridge-augmented
   system; it finds an optimal barycenter;
2. a min-norm polish: among all simplex weights that reproduce the same
   barycenter, the one with smallest Euclidean norm is returned. The
   barycenter is unique even when the weights are not, so this gives a
   deterministic tie-break.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import ComputationError, InputError
from .quantile import StepQuantileFn, evaluate
from .wasserstein import merged_grid, values_on_grid

logger = logging.getLogger(__name__)

__all__ = [
    "FitConfig",
    "SimplexWeights",
    "fit_period",
    "fit_period_mc",
    "aggregate_weights",
    "solve_simplex_ls",
    "project_simplex",
]

Mode = Literal["simplex", "sum_to_one"]

# Singular values below this fraction of the largest are treated as exact
# null directions when selecting the min-norm minimiser.
_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class FitConfig:
    mode: Mode = "simplex"
    ridge: float = 1e-10
    tolerance: float = 1e-10
    max_iterations: Optional[int] = None  # None -> 10 * J
    mc_samples: int = 100_000
    seed: Optional[int] = 0

    def __post_init__(self):
        if self.mode not in ("simplex", "sum_to_one"):
            raise InputError(f"unknown mode {self.mode!r}")
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if not self.ridge >= 0:
            raise InputError("ridge must be non-negative")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InputError("max_iterations must be >= 1")
        if self.mc_samples < 1:
            raise InputError("mc_samples must be >= 1")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "ridge": self.ridge,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    """Donor weights plus fit diagnostics.

    ``objective`` is the attained squared-W2 residual without the ridge term.
    """

    lam: np.ndarray
    mode: Mode = "simplex"
    objective: float = float("nan")
    ridge: float = 0.0
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).ravel()
        if lam.size == 0:
            raise InputError("empty weight vector")
        if abs(lam.sum() - 1.0) > 1e-9:
            raise InputError(f"weights sum to {lam.sum()!r}, expected 1")
        if self.mode == "simplex":
            if np.any(lam < -1e-12):
                raise InputError("simplex weights must be non-negative")
            lam = np.clip(lam, 0.0, None)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def extrapolation(self) -> bool:
        return self.mode == "sum_to_one"

    def __len__(self):
        return self.lam.size

    def __eq__(self, other):
        if not isinstance(other, SimplexWeights):
            return NotImplemented
        return (
            np.array_equal(self.lam, other.lam)
            and self.mode == other.mode
            and _same_float(self.objective, other.objective)
            and self.ridge == other.ridge
            and self.converged == other.converged
            and self.iterations == other.iterations
        )

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam.tolist(),
            "mode": self.mode,
            "objective": self.objective,
            "ridge": self.ridge,
            "converged": self.converged,
            "iterations": self.iterations,
            "extrapolation": self.extrapolation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimplexWeights":
        return cls(
            np.asarray(d["lambda"], float),
            d.get("mode", "simplex"),
            float(d.get("objective", float("nan"))),
            float(d.get("ridge", 0.0)),
            bool(d.get("converged", True)),
            int(d.get("iterations", 0)),
        )


def _same_float(a, b):
    return a == b or (np.isnan(a) and np.isnan(b))


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


# ---------------------------------------------------------------------------
# least-squares core


def _sum_to_one_basis(m: int) -> np.ndarray:
    """Orthonormal basis of the complement of the all-ones vector in R^m."""
    q, _ = np.linalg.qr(np.ones((m, 1)), mode="complete")
    return q[:, 1:]


def _eq_ls(A: np.ndarray) -> np.ndarray:
    """Min-norm minimiser of ``||A x||`` subject to ``sum(x) = 1``."""
    m = A.shape[1]
    if m == 1:
        return np.ones(1)
    x0 = np.full(m, 1.0 / m)
    Z = _sum_to_one_basis(m)
    y, *_ = np.linalg.lstsq(A @ Z, -(A @ x0), rcond=None)
    return x0 + Z @ y


def _active_set(A: np.ndarray, H: np.ndarray, tol: float, max_iter: int):
    """Minimise ``||A lam||^2`` over the unit simplex, ``H = A.T A``."""
    J = A.shape[1]
    j0 = int(np.argmin(np.diag(H)))
    free = [j0]
    lam = np.zeros(J)
    lam[j0] = 1.0
    it = 0
    converged = False
    while it < max_iter and not converged:
        g = H @ lam
        dual = g - lam @ g
        dual[free] = np.inf
        j = int(np.argmin(dual))
        if dual[j] >= -tol:
            converged = True
            break
        free.append(j)
        entering = True
        while it < max_iter:
            it += 1
            z = _eq_ls(A[:, free])
            if entering and z[-1] <= 0:
                # the entering donor cannot take positive weight: the negative
                # dual was rounding noise
                free.pop()
                converged = True
                break
            entering = False
            if np.all(z > 0):
                lam[:] = 0.0
                lam[free] = z
                break
            cur = lam[free]
            neg = np.flatnonzero(z <= 0)
            ratios = cur[neg] / (cur[neg] - z[neg])
            block = neg[int(np.argmin(ratios))]
            cur = cur + ratios.min() * (z - cur)
            cur[block] = 0.0
            cur[cur <= 1e-15] = 0.0
            lam[:] = 0.0
            lam[free] = cur
            lam /= lam.sum()
            free = [f for f, c in zip(free, cur) if c > 0]
    return lam, converged, it


def _min_norm_polish(R: np.ndarray, lam: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Smallest-norm simplex point with the same image ``R lam``.

    Solves ``min ||x||^2`` s.t. ``C x = C lam``, ``x >= 0`` where ``C`` stacks
    the row space of ``R`` and the all-ones row. Primal active set starting
    from the feasible point ``lam``.
    """
    J = lam.size
    _, s, vt = np.linalg.svd(R, full_matrices=False)
    k = int(np.sum(s > _RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
    if k >= J:
        return lam
    C = np.vstack([vt[:k], np.ones((1, J))])
    b = C @ lam
    x = lam.copy()
    free = list(np.flatnonzero(x > 0))
    for _ in range(max_iter):
        Cf = C[:, free]
        z, *_ = np.linalg.lstsq(Cf, b, rcond=None)
        if np.any(z < -1e-14):
            cur = x[free]
            neg = z < 0
            step = np.min(cur[neg] / (cur[neg] - z[neg]))
            cur = cur + step * (z - cur)
            x[:] = 0.0
            x[free] = cur
            free = [f for f, c in zip(free, cur) if c > 1e-15]
            continue
        x[:] = 0.0
        x[free] = np.clip(z, 0.0, None)
        mu, *_ = np.linalg.lstsq(Cf.T, x[free], rcond=None)
        s_out = C.T @ mu
        s_out[free] = -np.inf
        j = int(np.argmax(s_out))
        if s_out[j] <= tol:
            break
        free.append(j)
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def solve_simplex_ls(
    A: np.ndarray,
    mode: Mode = "simplex",
    ridge: float = 1e-10,
    tolerance: float = 1e-10,
    max_iterations: Optional[int] = None,
) -> tuple[np.ndarray, bool, int]:
    """Minimise ``||A lam||^2`` with ``sum(lam) = 1`` (and ``lam >= 0`` in simplex mode).

    Returns ``(lam, converged, iterations)``. Ties are broken towards the
    minimum Euclidean norm.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] == 0:
        raise InputError("need at least one donor")
    if not np.all(np.isfinite(A)):
        raise ComputationError("degenerate quantile input")
    J = A.shape[1]
    R = np.linalg.qr(A, mode="r") if A.shape[0] > J else A
    scale = float(np.sum(R * R)) / J
    if scale == 0.0 or not np.isfinite(scale):
        if not np.isfinite(scale):
            raise ComputationError("degenerate quantile input")
        return np.full(J, 1.0 / J), True, 0
    R = R / np.sqrt(scale)
    Aug = np.vstack([R, np.sqrt(ridge) * np.eye(J)]) if ridge > 0 else R

    if mode == "sum_to_one":
        return _eq_ls(Aug), True, 1

    if J == 1:
        return np.ones(1), True, 0
    max_iter = max_iterations if max_iterations is not None else 10 * J
    H = Aug.T @ Aug
    lam, converged, it = _active_set(Aug, H, tolerance, max_iter)
    if not converged:
        logger.warning("active-set solver hit the iteration cap (%d); returning best iterate", max_iter)
    lam = _min_norm_polish(R, lam, tolerance, max(max_iter, 2 * J))
    return lam, converged, it


# ---------------------------------------------------------------------------
# public fitting API


def _check_donors(donors: Sequence[StepQuantileFn]):
    if len(donors) == 0:
        raise InputError("need at least one donor (J >= 1)")


def _weights(A: np.ndarray, config: FitConfig) -> SimplexWeights:
    lam, converged, it = solve_simplex_ls(
        A, config.mode, config.ridge, config.tolerance, config.max_iterations
    )
    r = A @ lam
    return SimplexWeights(
        lam, config.mode, float(r @ r), config.ridge, converged=converged, iterations=it
    )


def difference_design(target: StepQuantileFn, donors: Sequence[StepQuantileFn]) -> np.ndarray:
    """Rows ``sqrt(width_k) * (F_j - F_0)`` on the merged grid."""
    grid = merged_grid([target, *donors])
    w = np.sqrt(grid.widths)
    t = values_on_grid(target, grid)
    D = np.empty((len(grid), len(donors)))
    for j, f in enumerate(donors):
        D[:, j] = values_on_grid(f, grid) - t
    return D * w[:, None]


def fit_period(
    target: StepQuantileFn, donors: Sequence[StepQuantileFn], config: FitConfig = FitConfig()
) -> SimplexWeights:
    """Exact fit: the integral is evaluated on the merged breakpoint grid."""
    _check_donors(donors)
    return _weights(difference_design(target, donors), config)


def fit_period_mc(
    target: StepQuantileFn,
    donors: Sequence[StepQuantileFn],
    config: FitConfig = FitConfig(),
    rng: Optional[np.random.Generator] = None,
) -> SimplexWeights:
    """Sampling fit: evaluate all quantile functions at ``M`` uniform draws.

    This is the constrained regression of the target's draws on the donors'
    draws. It converges to :func:`fit_period` as ``M`` grows.
    """
    _check_donors(donors)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    M = config.mc_samples
    u = 1.0 - rng.random(M)  # (0, 1]
    t = evaluate(target, u)
    D = np.column_stack([evaluate(f, u) - t for f in donors]) / np.sqrt(M)
    return _weights(np.atleast_2d(D), config)


def aggregate_weights(per_period: Sequence[SimplexWeights], time_weights=None) -> SimplexWeights:
    """Convex combination of per-period weights (uniform by default)."""
    if len(per_period) == 0:
        raise InputError("no per-period weights to aggregate")
    T = len(per_period)
    w = np.full(T, 1.0 / T) if time_weights is None else np.asarray(time_weights, float).ravel()
    if w.size != T:
        raise InputError(f"{w.size} time weights for {T} periods")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InputError("time weights must be non-negative and sum to 1")
    sizes = {len(p) for p in per_period}
    if len(sizes) != 1:
        raise InputError("per-period weight vectors differ in length")
    lam = np.sum([wt * p.lam for wt, p in zip(w, per_period)], axis=0)
    mode = "simplex" if all(p.mode == "simplex" for p in per_period) else "sum_to_one"
    obj = float(np.dot(w, [p.objective for p in per_period]))
    return SimplexWeights(
        lam,
        mode,
        obj,
        per_period[0].ridge,
        converged=all(p.converged for p in per_period),
        iterations=sum(p.iterations for p in per_period),
    )
