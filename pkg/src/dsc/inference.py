"""
Large-sample inference for the counterfactual quantile function.

Statistics are computed exactly on the merged breakpoint grid. Their null
distributions are approximated by Monte Carlo: the limiting Gaussian
processes are simulated from Brownian bridge paths with plug-in estimates of
the sample shares ``gamma_j = n_j / sum(n)`` and of the quantile densities
``f_j(F_j^{-1}(q))`` (Gaussian KDE, Silverman bandwidth).

Each unit's empirical quantile process converges to its own bridge, and the
units are sampled independently, so by default every unit gets an
independent bridge. ``bridge="shared"`` drives all units with one common
path instead. Under the null with equal sample sizes the shared-path
contrast cancels exactly, so that option is only useful for comparison.

All rate factors carry the common multiplier ``prod_j gamma_j`` (or its
square root). It is applied at the end, in log space, so that panels with
many donors do not underflow.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import InputError
from .estimator import DscResult, PanelDataset, fit_dsc
from .quantile import EmpiricalSample, StepQuantileFn, evaluate, quantile_fn
from .solver import FitConfig
from .wasserstein import barycenter, merged_grid, values_on_grid, w2_squared

__all__ = [
    "BridgePaths",
    "brownian_bridge_paths",
    "bridge_at",
    "silverman_bandwidth",
    "DensityAtQuantile",
    "density_at_quantiles",
    "TestReport",
    "ConfidenceBand",
    "confidence_band",
    "equality_test",
    "dominance_test",
    "discrete_equality_test",
    "split_sample_pre_test",
    "p_value",
]

DENSITY_FLOOR = 1e-8
MAX_DISCRETE_SUPPORT = 200
_LOG_TINY = -700.0

Bridge = Literal["independent", "shared"]


# ---------------------------------------------------------------------------
# Brownian bridge


@dataclass(frozen=True, eq=False)
class BridgePaths:
    """``values[b, k]`` is path ``b`` at ``grid[k]``; grid includes 0 and 1."""

    grid: np.ndarray
    values: np.ndarray

    def __len__(self):
        return self.values.shape[0]


def brownian_bridge_paths(K: int, B: int, seed=None, rng=None) -> BridgePaths:
    """``B`` standard Brownian bridge paths on ``linspace(0, 1, K)``.

    Exact finite-dimensional sampling via ``W(q) - q W(1)``.
    """
    if K < 2 or B < 1:
        raise InputError("need K >= 2 grid points and B >= 1 paths")
    rng = np.random.default_rng(seed) if rng is None else rng
    grid = np.linspace(0.0, 1.0, K)
    inc = rng.standard_normal((B, K - 1)) * np.sqrt(np.diff(grid))
    W = np.zeros((B, K))
    np.cumsum(inc, axis=1, out=W[:, 1:])
    vals = W - grid * W[:, -1:]
    vals[:, 0] = 0.0
    vals[:, -1] = 0.0
    return BridgePaths(grid, vals)


def bridge_at(points, B: int, rng: np.random.Generator) -> np.ndarray:
    """Bridge values at arbitrary strictly increasing points in (0, 1); shape ``(B, len(points))``."""
    p = np.asarray(points, dtype=float)
    if p.size == 0:
        return np.zeros((B, 0))
    steps = np.diff(np.concatenate(([0.0], p, [1.0])))
    W = np.cumsum(rng.standard_normal((B, p.size + 1)) * np.sqrt(steps), axis=1)
    return W[:, :-1] - p * W[:, -1:]


# ---------------------------------------------------------------------------
# densities


def silverman_bandwidth(x) -> float:
    """``0.9 * min(sd, IQR / 1.349) * n^(-1/5)``, falling back to sd when the IQR is 0."""
    x = np.asarray(x, dtype=float)
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    a = min(sd, iqr / 1.349) if iqr > 0 else sd
    return float(0.9 * a * x.size ** -0.2)


@dataclass(frozen=True, eq=False)
class DensityAtQuantile:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    floored: int
    unit_id: object = None

    @property
    def floored_fraction(self) -> float:
        return self.floored / self.grid.size


def _gaussian_kde(x: np.ndarray, at: np.ndarray, h: float, chunk: int = 2_000_000) -> np.ndarray:
    out = np.empty(at.size)
    step = max(1, chunk // max(1, x.size))
    c = 1.0 / (x.size * h * np.sqrt(2 * np.pi))
    for s in range(0, at.size, step):
        u = (at[s : s + step, None] - x[None, :]) / h
        out[s : s + step] = c * np.exp(-0.5 * u * u).sum(axis=1)
    return out


def density_at_quantiles(
    sample: EmpiricalSample, grid, bandwidth: Optional[float] = None, floor: float = DENSITY_FLOOR
) -> DensityAtQuantile:
    """Plug-in ``f(F^{-1}(q))`` on ``grid``: Gaussian KDE at the empirical quantiles.

    ``q = 0`` is mapped to the sample minimum. A constant sample has zero
    bandwidth; its density is reported at the floor with a warning.
    """
    if sample.n < 2:
        raise InputError("density estimation needs at least 2 observations")
    grid = np.asarray(grid, dtype=float)
    x = sample.values
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        warnings.warn("degenerate bandwidth (constant sample); density set to floor", RuntimeWarning, stacklevel=2)
        dens = np.full(grid.size, floor)
        return DensityAtQuantile(grid, dens, 0.0, grid.size, sample.unit_id)
    pts = np.where(grid > 0, evaluate(quantile_fn(sample), np.clip(grid, 1e-300, 1.0)), x[0])
    dens = _gaussian_kde(x, np.atleast_1d(pts), h)
    floored = int(np.sum(dens < floor))
    return DensityAtQuantile(grid, np.maximum(dens, floor), h, floored, sample.unit_id)


# ---------------------------------------------------------------------------
# reports


def p_value(statistic: float, null_samples) -> float:
    """Share of null draws at least as large as the observed statistic."""
    null = np.asarray(null_samples, dtype=float)
    return float(np.mean(null >= statistic))


def _fingerprint(settings: dict) -> str:
    blob = json.dumps(settings, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    kind: str
    statistic: float
    null_samples: np.ndarray
    p_value: float
    period: object = None
    settings: dict = field(default_factory=dict)
    sample_sizes: tuple = ()
    scale: str = "absolute"
    warnings: tuple = ()

    @property
    def B(self) -> int:
        return int(np.size(self.null_samples))

    @property
    def fingerprint(self) -> str:
        return _fingerprint({"kind": self.kind, **self.settings})

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "period": self.period,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "B": self.B,
            "scale": self.scale,
            "sample_sizes": list(self.sample_sizes),
            "settings": self.settings,
            "fingerprint": self.fingerprint,
            "warnings": list(self.warnings),
            "null_samples": np.asarray(self.null_samples).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        return cls(
            d["kind"],
            float(d["statistic"]),
            np.asarray(d["null_samples"], dtype=float),
            float(d["p_value"]),
            d.get("period"),
            dict(d.get("settings", {})),
            tuple(d.get("sample_sizes", ())),
            d.get("scale", "absolute"),
            tuple(d.get("warnings", ())),
        )


def _report(kind, stat_norm, null_norm, log_factor, period, settings, sizes, notes) -> TestReport:
    """Rescale normalised statistic and null draws by ``exp(log_factor)`` and count."""
    if log_factor > _LOG_TINY:
        f = float(np.exp(log_factor))
        stat, null, scale = stat_norm * f, null_norm * f, "absolute"
    else:
        stat, null, scale = stat_norm, null_norm, "normalized"
        notes = notes + (f"common rate factor exp({log_factor:.1f}) underflows; values reported without it",)
    null = np.asarray(null, dtype=float)
    null.setflags(write=False)
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return TestReport(kind, float(stat), null, p_value(stat, null), period, settings, tuple(sizes), scale, tuple(notes))


# ---------------------------------------------------------------------------
# continuous-case machinery


def _shares(obs: EmpiricalSample, donors: Sequence[EmpiricalSample]):
    n = np.array([obs.n] + [d.n for d in donors], dtype=float)
    N = n.sum()
    return n, N, n / N


def _limit_process(
    obs: EmpiricalSample,
    donors: Sequence[EmpiricalSample],
    lam: np.ndarray,
    B: int,
    K: int,
    rng: np.random.Generator,
    bandwidth: Optional[float],
    bridge: Bridge,
):
    """Simulated limit of ``sqrt(N) * (cf - observed)`` without the ``sqrt(prod gamma)`` factor.

    Returns ``(grid, paths, notes)`` with ``paths`` of shape ``(B, K)``.
    """
    _, _, gamma = _shares(obs, donors)
    grid = np.linspace(0.0, 1.0, K)
    inner = grid[1:-1]
    notes = []

    def inv_density(s):
        d = density_at_quantiles(s, inner, bandwidth)
        if d.floored_fraction > 0.2:
            notes.append(
                f"density floor hit on {d.floored_fraction:.0%} of the grid for unit {s.unit_id!r}: "
                "heavy-tail/discreteness suspected; consider discrete test"
            )
        return np.concatenate(([0.0], 1.0 / d.density, [0.0]))

    terms = [(-1.0 / np.sqrt(gamma[0]), inv_density(obs))]
    for j in np.flatnonzero(lam > 0):
        terms.append((lam[j] / np.sqrt(gamma[j + 1]), inv_density(donors[j])))
    if bridge == "shared":
        path = brownian_bridge_paths(K, B, rng=rng).values
        scale = sum(c * g for c, g in terms)
        out = path * scale
    elif bridge == "independent":
        out = np.zeros((B, K))
        for c, g in terms:
            out += brownian_bridge_paths(K, B, rng=rng).values * (c * g)
    else:
        raise InputError(f"unknown bridge option {bridge!r}")
    return grid, out, tuple(notes)


def _trapz(y, x):
    return np.trapezoid(y, x, axis=-1) if hasattr(np, "trapezoid") else np.trapz(y, x, axis=-1)


def _cumtrapz(y, x):
    dx = np.diff(x)
    mid = 0.5 * (y[..., 1:] + y[..., :-1]) * dx
    out = np.zeros_like(y)
    np.cumsum(mid, axis=-1, out=out[..., 1:])
    return out


def _positive_part_integral(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    """Exact ``int max(l(s), 0)`` for functions linear from ``a`` to ``b`` over widths ``w``."""
    both = (a >= 0) & (b >= 0)
    total = np.sum(w[both] * (a[both] + b[both]) / 2.0)
    cross = (a > 0) != (b > 0)
    cross &= ~both
    pa, pb = np.maximum(a[cross], 0.0), np.maximum(b[cross], 0.0)
    span = np.abs(b[cross] - a[cross])
    total += np.sum(w[cross] * (pa + pb) ** 2 / (2.0 * span))
    return float(total)


def _dominance_statistic(obs_qf: StepQuantileFn, cf: StepQuantileFn, order: str) -> float:
    """Unscaled ``int max(cf - obs, 0)`` (first order) or its integrated version (second order)."""
    g = merged_grid([obs_qf, cf])
    w = g.widths
    diff = values_on_grid(cf, g) - values_on_grid(obs_qf, g)
    if order == "first":
        return float(np.sum(np.maximum(diff, 0.0) * w))
    cum = np.concatenate(([0.0], np.cumsum(diff * w)))
    return _positive_part_integral(cum[:-1], cum[1:], w)


def _settings(**kw) -> dict:
    return {k: v for k, v in kw.items()}


def _continuous_test(
    kind: str,
    obs: EmpiricalSample,
    donors: Sequence[EmpiricalSample],
    lam: np.ndarray,
    period,
    B: int,
    K: int,
    seed,
    bandwidth: Optional[float],
    bridge: Bridge,
) -> TestReport:
    if B < 1 or K < 3:
        raise InputError("need B >= 1 and K >= 3")
    lam = np.asarray(lam, dtype=float)
    rng = np.random.default_rng(seed)
    n, N, gamma = _shares(obs, donors)
    obs_qf = quantile_fn(obs)
    cf = barycenter([quantile_fn(d) for d in donors], lam)
    grid, paths, notes = _limit_process(obs, donors, lam, B, K, rng, bandwidth, bridge)
    log_prod_gamma = float(np.sum(np.log(gamma)))
    if kind == "equality":
        stat = N * w2_squared(obs_qf, cf)
        null = _trapz(paths**2, grid)
        log_factor = log_prod_gamma
    elif kind in ("fsd", "ssd"):
        order = "first" if kind == "fsd" else "second"
        stat = np.sqrt(N) * _dominance_statistic(obs_qf, cf, order)
        proc = paths if kind == "fsd" else _cumtrapz(paths, grid)
        null = _trapz(np.maximum(proc, 0.0), grid)
        log_factor = 0.5 * log_prod_gamma
    else:
        raise InputError(f"unknown test kind {kind!r}")
    settings = _settings(B=B, K=K, seed=seed, bandwidth=bandwidth, bridge=bridge, density_floor=DENSITY_FLOOR)
    return _report(kind, stat, null, log_factor, period, settings, n.astype(int).tolist(), notes)


def _post_inputs(result: DscResult, panel: PanelDataset, period):
    if not panel.is_post(period):
        raise InputError("tests on the fitted counterfactual are defined post-treatment only")
    obs = panel.sample(result.treated_unit, period)
    donors = [panel.sample(u, period) for u in result.donors]
    return obs, donors, result.weights.lam


def equality_test(
    result: DscResult,
    panel: PanelDataset,
    period,
    B: int = 500,
    K: int = 512,
    seed=0,
    bandwidth: Optional[float] = None,
    bridge: Bridge = "independent",
) -> TestReport:
    """Test ``H0: counterfactual == observed`` with the rate-scaled squared W2 distance."""
    obs, donors, lam = _post_inputs(result, panel, period)
    return _continuous_test("equality", obs, donors, lam, period, B, K, seed, bandwidth, bridge)


def dominance_test(
    result: DscResult,
    panel: PanelDataset,
    period,
    order: Literal["first", "second"] = "first",
    B: int = 500,
    K: int = 512,
    seed=0,
    bandwidth: Optional[float] = None,
    bridge: Bridge = "independent",
) -> TestReport:
    """Test ``H0``: the observed distribution dominates the counterfactual.

    Rejection means the counterfactual quantile function (first order) or its
    running integral (second order) exceeds the observed one on a set of
    positive measure.
    """
    if order not in ("first", "second"):
        raise InputError("order must be 'first' or 'second'")
    obs, donors, lam = _post_inputs(result, panel, period)
    kind = "fsd" if order == "first" else "ssd"
    return _continuous_test(kind, obs, donors, lam, period, B, K, seed, bandwidth, bridge)


# ---------------------------------------------------------------------------
# discrete case


def _misalignment_integral(heights: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """``int (sum_k heights_k 1{u > pos_k})^2 du`` per row; heights sum to zero.

    ``pos`` has shape ``(B, m)``.
    """
    if heights.size == 2:
        return np.abs(pos[:, 0] - pos[:, 1]) * heights[0] ** 2
    order = np.argsort(pos, axis=1)
    p = np.take_along_axis(pos, order, axis=1)
    h = heights[order]
    level = np.cumsum(h, axis=1)[:, :-1]
    return np.sum(level**2 * np.diff(p, axis=1), axis=1)


def _discrete_null(
    obs: EmpiricalSample,
    donors: Sequence[EmpiricalSample],
    lam: np.ndarray,
    B: int,
    rng: np.random.Generator,
    bridge: Bridge,
    local: bool = True,
) -> np.ndarray:
    """Simulated null of ``sqrt(N) * W2^2`` without the ``sqrt(prod gamma)`` factor.

    Under the null the target jumps wherever a weighted donor jumps, by the
    weighted donor jump. Each empirical jump location is displaced by the
    unit's own bridge, ``B_j(q) / sqrt(gamma_j)`` on the ``sqrt(N)`` scale,
    and the squared area between the displaced target and counterfactual
    steps is integrated.

    With ``local=False`` every jump level is treated in isolation (the pure
    limit). ``local=True`` places the displaced jumps at ``q + B_j(q)/sqrt(n_j)``
    and integrates the whole step difference at once, so neighbouring levels
    whose displacements overlap interact as they do in the sample. Both share
    the same limit; the second is much closer at moderate n when support
    points sit at nearby levels.
    """
    n, N, gamma = _shares(obs, donors)
    active = np.flatnonzero(lam > 0)
    events = {}
    for j in active:
        locs, sizes = quantile_fn(donors[j]).jumps()
        for q, s in zip(locs, sizes):
            events.setdefault(q, []).append((j, lam[j] * s))
    if not events:
        return np.zeros(B)
    pts = np.array(sorted(events))
    col = {q: i for i, q in enumerate(pts)}
    if bridge == "shared":
        common = bridge_at(pts, B, rng)
        u_obs = common / np.sqrt(gamma[0])
        donor_paths = {j: common / np.sqrt(gamma[j + 1]) for j in active}
    elif bridge == "independent":
        u_obs = bridge_at(pts, B, rng) / np.sqrt(gamma[0])
        donor_paths = {j: bridge_at(pts, B, rng) / np.sqrt(gamma[j + 1]) for j in active}
    else:
        raise InputError(f"unknown bridge option {bridge!r}")
    hs, pos = [], []
    for q, contrib in sorted(events.items()):
        c = col[q]
        h = [h for _, h in contrib] + [-sum(h for _, h in contrib)]
        p = [donor_paths[j][:, c] for j, _ in contrib] + [u_obs[:, c]]
        if local:
            p = [np.clip(q + x / np.sqrt(N), 0.0, 1.0) for x in p]
        hs.append(np.array(h))
        pos.append(np.column_stack(p))
    if local:
        return np.sqrt(N) * _misalignment_integral(np.concatenate(hs), np.hstack(pos))
    return sum(_misalignment_integral(h, p) for h, p in zip(hs, pos))


def discrete_equality_test(
    result: DscResult,
    panel: PanelDataset,
    period,
    B: int = 500,
    seed=0,
    bridge: Bridge = "independent",
    local: bool = True,
) -> TestReport:
    """Equality test for finitely supported outcomes; squared W2 scaled by the square-root rate.

    See ``_discrete_null`` for ``local``.
    """
    obs, donors, lam = _post_inputs(result, panel, period)
    return _discrete_test(obs, donors, lam, period, B, seed, bridge, local)


def _discrete_test(obs, donors, lam, period, B, seed, bridge, local=True) -> TestReport:
    for s in [obs, *donors]:
        if np.unique(s.values).size > MAX_DISCRETE_SUPPORT:
            raise InputError(
                f"unit {s.unit_id!r} has more than {MAX_DISCRETE_SUPPORT} support points: use continuous test"
            )
    lam = np.asarray(lam, dtype=float)
    rng = np.random.default_rng(seed)
    n, N, gamma = _shares(obs, donors)
    cf = barycenter([quantile_fn(d) for d in donors], lam)
    stat = np.sqrt(N) * w2_squared(quantile_fn(obs), cf)
    null = _discrete_null(obs, donors, lam, B, rng, bridge, local)
    settings = _settings(B=B, seed=seed, bridge=bridge, local=local)
    log_factor = 0.5 * float(np.sum(np.log(gamma)))
    return _report("discrete_equality", stat, null, log_factor, period, settings, n.astype(int).tolist(), ())


# ---------------------------------------------------------------------------
# confidence bands


@dataclass(frozen=True, eq=False)
class ConfidenceBand:
    estimate: StepQuantileFn
    lower: StepQuantileFn
    upper: StepQuantileFn
    level: float
    B: int
    uniform: bool
    period: object = None
    warnings: tuple = ()

    def contains(self, q, value) -> bool:
        return bool(evaluate(self.lower, q) <= value <= evaluate(self.upper, q))

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "level": self.level,
            "B": self.B,
            "uniform": self.uniform,
            "estimate": self.estimate.to_dict(),
            "lower": self.lower.to_dict(),
            "upper": self.upper.to_dict(),
            "warnings": list(self.warnings),
        }


def _band(donors, lam, level, B, rng, uniform, period) -> ConfidenceBand:
    if not 0 < level < 1:
        raise InputError("level must lie in (0, 1)")
    notes = ()
    if B < 50:
        notes = (f"only B={B} bootstrap replicates; band quantiles will be noisy",)
        warnings.warn(notes[0], RuntimeWarning, stacklevel=3)
    active = np.flatnonzero(lam > 0)
    raw = [StepQuantileFn(np.arange(1, donors[j].n + 1) / donors[j].n, donors[j].values) for j in active]
    grid = merged_grid(raw)
    est = np.zeros(len(grid))
    idx = []
    for j, f in zip(active, raw):
        k = np.searchsorted(f.breakpoints, grid.breakpoints, side="left")
        idx.append(k)
        est += lam[j] * donors[j].values[k]
    draws = np.zeros((B, len(grid)))
    for b in range(B):
        for j, k in zip(active, idx):
            x = donors[j].values
            res = np.sort(x[rng.integers(0, x.size, x.size)])
            draws[b] += lam[j] * res[k]
    dev = np.abs(draws - est)
    if uniform:
        sd = draws.std(axis=0)
        ok = sd > 0
        t = np.zeros(B)
        if ok.any():
            t = np.max(dev[:, ok] / sd[ok], axis=1)
        half = np.quantile(t, level) * sd
    else:
        half = np.quantile(dev, level, axis=0)
    b = grid.breakpoints
    return ConfidenceBand(
        StepQuantileFn(b, est), StepQuantileFn(b, est - half), StepQuantileFn(b, est + half),
        level, B, uniform, period, notes,
    )


def confidence_band(
    result: DscResult,
    panel: PanelDataset,
    period,
    level: float = 0.95,
    B: int = 200,
    seed=0,
    uniform: bool = False,
) -> ConfidenceBand:
    """Nonparametric bootstrap band for the counterfactual quantile function.

    Donor samples are resampled with replacement and the barycenter is
    rebuilt with the weights held fixed. The band is centred at the estimate:
    pointwise it uses the ``level`` quantile of ``|cf* - cf|``, and with
    ``uniform=True`` a sup-t critical value times the bootstrap sd.
    """
    if not panel.is_post(period):
        raise InputError("bands are defined post-treatment only; use split_sample_pre_test before t0")
    donors = [panel.sample(u, period) for u in result.donors]
    rng = np.random.default_rng(seed)
    return _band(donors, result.weights.lam, level, B, rng, uniform, period)


# ---------------------------------------------------------------------------
# pre-treatment periods via sample splitting


def split_sample_pre_test(
    panel: PanelDataset,
    config: FitConfig = FitConfig(),
    split_fraction: float = 0.5,
    seed=0,
    B: int = 500,
    K: int = 512,
    time_weights=None,
    kind: str = "equality",
    bandwidth: Optional[float] = None,
    bridge: Bridge = "independent",
) -> dict:
    """Fit weights on one random part of every pre-period sample, test on the other.

    Returns ``{period: TestReport}`` for every pre-treatment period. ``kind``
    is one of ``equality``, ``fsd``, ``ssd``, ``discrete_equality``.
    """
    if not 0 < split_fraction < 1:
        raise InputError("split_fraction must lie in (0, 1)")
    ss = np.random.SeedSequence(seed)
    split_rng = np.random.default_rng(ss.spawn(1)[0])
    pre = panel.pre_periods
    fit_part, test_part = {}, {}
    for t in pre:
        for u in panel.units:
            s = panel.sample(u, t)
            if s.n < 2.0 / split_fraction or s.n < 2.0 / (1 - split_fraction):
                raise InputError(f"cell ({u!r}, {t!r}) has {s.n} draws: too few to split")
            perm = split_rng.permutation(s.n)
            k = int(round(split_fraction * s.n))
            fit_part[(u, t)] = EmpiricalSample.from_values(s.values[perm[:k]], u, t)
            test_part[(u, t)] = EmpiricalSample.from_values(s.values[perm[k:]], u, t)
    fit_panel = PanelDataset(fit_part, panel.treated_unit, panel.t0, pre, panel.units)
    res = fit_dsc(fit_panel, config, time_weights)
    lam = res.weights.lam
    seeds = ss.spawn(len(pre) + 1)[1:]
    out = {}
    for t, sq in zip(pre, seeds):
        obs = test_part[(panel.treated_unit, t)]
        donors = [test_part[(u, t)] for u in panel.donors]
        s = int(sq.generate_state(1)[0])
        if kind == "discrete_equality":
            rep = _discrete_test(obs, donors, lam, t, B, s, bridge)
        else:
            rep = _continuous_test(kind, obs, donors, lam, t, B, K, s, bandwidth, bridge)
        settings = dict(rep.settings, split_fraction=split_fraction, split_seed=seed)
        out[t] = TestReport(rep.kind, rep.statistic, rep.null_samples, rep.p_value, t, settings,
                            rep.sample_sizes, rep.scale, rep.warnings)
    return out
