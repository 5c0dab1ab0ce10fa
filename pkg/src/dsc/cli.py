"""
Command-line driver: ``dsc fit | effects | test | placebo | simulate``.

Settings come from an optional JSON config file (keys as in ``RunConfig``)
and are overridden by flags. Exit status is 0 on success, 1 on invalid
input and 2 when a computation fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DscError, InputError
from .estimator import att, effect_curves, fit_dsc
from .inference import (
    confidence_band,
    discrete_equality_test,
    dominance_test,
    equality_test,
    split_sample_pre_test,
)
from .io import RunConfig, default_workers, load_panel, write_csv, write_json, write_panel_csv
from .placebo import placebo_test
from .simharness import SimSpec, generate, hull_residual, sparsity_metric, write_quantile_grid_csv
from .wasserstein import barycenter

log = logging.getLogger("dsc")

KINDS = ("equality", "fsd", "ssd", "discrete")


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, data=True):
    p.add_argument("--config", help="JSON file with RunConfig keys")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", dest="max_workers", type=int, help="threads (default: $DSC_THREADS)")
    if data:
        p.add_argument("--input", help="long CSV with header unit,period,value")
        p.add_argument("--treated", dest="treated_unit", help="treated unit id")
        p.add_argument("--t0", type=int, help="last pre-treatment period")
        p.add_argument("--mode", dest="fit_mode", choices=("simplex", "sum_to_one"))
        p.add_argument("--ridge", dest="fit_ridge", type=float)
        p.add_argument("--tolerance", dest="fit_tolerance", type=float)
        p.add_argument("--time-weights", dest="time_weights", type=_floats, help="comma-separated, one per pre period")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dsc", description="Distributional synthetic controls")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit donor weights and write counterfactual quantile functions")
    _common(p)

    p = sub.add_parser("effects", help="ATT, quantile effects and Lorenz curves per post period")
    _common(p)
    p.add_argument("--K", type=int, help="probability grid size")
    p.add_argument("--band", action="store_true", help="also write bootstrap confidence bands")
    p.add_argument("--uniform", action="store_true", help="sup-t uniform band instead of pointwise")
    p.add_argument("--B", type=int)
    p.add_argument("--level", type=float)

    p = sub.add_parser("test", help="equality / dominance / discrete tests")
    _common(p)
    p.add_argument("--kind", choices=KINDS, default="equality")
    p.add_argument("--period", type=int, help="post period (default: all)")
    p.add_argument("--B", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--pre", action="store_true", help="split-sample test of every pre period")
    p.add_argument("--split-fraction", type=float, default=0.5)

    p = sub.add_parser("placebo", help="placebo permutation test over all units")
    _common(p)
    p.add_argument("--max-pre-fit", type=float, help="drop placebo units with worse mean pre-fit")

    p = sub.add_parser("simulate", help="generate a synthetic panel and fit it")
    _common(p, data=False)
    p.add_argument("--family", choices=("gaussian_mixture", "binomial", "dirac"), default="gaussian_mixture")
    p.add_argument("--J", type=int, default=4)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--T", type=int, default=1)
    p.add_argument("--threshold", type=float, default=1e-4, help="sparsity threshold")
    return ap


def _config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if cfg.max_workers is None:
        cfg = cfg.updated(max_workers=default_workers())
    keys = ("input", "treated_unit", "t0", "output_dir", "seed", "max_workers", "time_weights",
            "fit_mode", "fit_ridge", "fit_tolerance", "B", "K", "level", "bandwidth")
    return cfg.updated(**{k: getattr(args, k, None) for k in keys})


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(cfg: RunConfig):
    cfg.require_data()
    panel = load_panel(cfg.input, cfg.treated_unit, cfg.t0)
    res = fit_dsc(panel, cfg.fit, cfg.time_weights, cfg.max_workers)
    return panel, res


def cmd_fit(args, cfg: RunConfig):
    panel, res = _load(cfg)
    out, prov = _outdir(cfg), cfg.provenance()
    w = res.weights
    write_json(
        {
            "treated_unit": res.treated_unit,
            "t0": res.t0,
            "donors": list(res.donors),
            "lambda": w.lam,
            "objective": w.objective,
            "converged": w.converged,
            "pre_fit_residuals": {str(t): r for t, r in res.pre_fit_residuals.items()},
        },
        out / "weights.json",
        prov,
    )
    write_json(res.to_dict(), out / "result.json", prov)
    rows = [
        (t, q, v)
        for t, f in res.counterfactuals.items()
        for q, v in zip(f.breakpoints, f.values)
    ]
    write_csv(pd.DataFrame(rows, columns=["period", "q", "value"]), out / "counterfactuals.csv", prov)
    pre = pd.DataFrame(list(res.pre_fit_residuals.items()), columns=["period", "objective"])
    write_csv(pre, out / "pre_fit.csv", prov)
    for d, lam in zip(res.donors, w.lam):
        print(f"{d}\t{lam:.17g}")


def cmd_effects(args, cfg: RunConfig):
    panel, res = _load(cfg)
    out, prov = _outdir(cfg), cfg.provenance()
    grid = np.arange(1, cfg.K + 1) / cfg.K
    curves, atts, bands = [], [], []
    for t in panel.post_periods:
        c = effect_curves(res, panel, t, grid)
        c.insert(0, "period", t)
        curves.append(c)
        atts.append((t, att(res, panel, t)))
        if args.band:
            b = confidence_band(res, panel, t, cfg.level, cfg.B, cfg.seed, uniform=args.uniform)
            bands.append(pd.DataFrame({
                "period": t, "q": grid,
                "lower": b.lower(grid), "estimate": b.estimate(grid), "upper": b.upper(grid),
            }))
    if not curves:
        raise InputError("no post-treatment periods")
    write_csv(pd.concat(curves, ignore_index=True), out / "effects.csv", prov)
    write_csv(pd.DataFrame(atts, columns=["period", "att"]), out / "att.csv", prov)
    if bands:
        write_csv(pd.concat(bands, ignore_index=True), out / "band.csv", prov)
    for t, a in atts:
        print(f"{t}\t{a:.17g}")


def cmd_test(args, cfg: RunConfig):
    panel, res = _load(cfg)
    out, prov = _outdir(cfg), cfg.provenance()
    kind = args.kind
    if args.pre:
        k = "discrete_equality" if kind == "discrete" else kind
        reps = split_sample_pre_test(panel, cfg.fit, args.split_fraction, cfg.seed, cfg.B, cfg.K,
                                     cfg.time_weights, k, cfg.bandwidth)
        doc = {"kind": k, "split_fraction": args.split_fraction,
               "reports": [r.to_dict() for r in reps.values()]}
        write_json(doc, out / f"pretest_{kind}.json", prov)
        for t, r in reps.items():
            print(f"{t}\t{r.statistic:.17g}\t{r.p_value:.17g}")
        return
    periods = panel.post_periods if args.period is None else (args.period,)
    if not periods:
        raise InputError("no post-treatment periods")
    for t in periods:
        if kind == "equality":
            r = equality_test(res, panel, t, cfg.B, cfg.K, cfg.seed, cfg.bandwidth)
        elif kind in ("fsd", "ssd"):
            order = "first" if kind == "fsd" else "second"
            r = dominance_test(res, panel, t, order, cfg.B, cfg.K, cfg.seed, cfg.bandwidth)
        else:
            r = discrete_equality_test(res, panel, t, cfg.B, cfg.seed)
        write_json(r.to_dict(), out / f"test_{kind}_{t}.json", prov)
        print(f"{t}\t{r.statistic:.17g}\t{r.p_value:.17g}")


def cmd_placebo(args, cfg: RunConfig):
    cfg.require_data()
    panel = load_panel(cfg.input, cfg.treated_unit, cfg.t0)
    rep = placebo_test(panel, cfg.fit, cfg.time_weights, args.max_pre_fit, cfg.max_workers)
    out, prov = _outdir(cfg), cfg.provenance()
    write_json(rep.to_dict(), out / "placebo.json", prov)
    rows = [
        (u, t, rep.distances[i, k], int(i == 0))
        for i, u in enumerate(rep.units)
        for k, t in enumerate(rep.periods)
    ]
    write_csv(pd.DataFrame(rows, columns=["unit", "period", "w2_squared", "treated"]), out / "placebo_gaps.csv", prov)
    for t, p in zip(rep.periods, rep.p_values):
        print(f"{t}\t{p:.17g}")


def cmd_simulate(args, cfg: RunConfig):
    spec = SimSpec(family=args.family, J=args.J, n=args.n, seed=cfg.seed, T=args.T)
    panel = generate(spec)
    out, prov = _outdir(cfg), cfg.provenance()
    prov["simspec"] = spec.to_dict()
    write_panel_csv(panel, out / "panel.csv")
    res = fit_dsc(panel, cfg.fit, None, cfg.max_workers)
    t = panel.pre_periods[-1]
    donors = [panel.qf(u, t) for u in panel.donors]
    target = panel.qf(panel.treated_unit, t)
    summary = {
        "family": spec.family, "J": spec.J, "n": spec.n, "seed": spec.seed,
        "sparsity": sparsity_metric(res.weights, args.threshold),
        "threshold": args.threshold,
        "objective": res.weights.objective,
        "hull_residual": hull_residual(target, donors, cfg.fit),
        "converged": res.weights.converged,
    }
    write_csv(pd.DataFrame([summary]), out / "summary.csv", prov)
    write_json({"spec": spec.to_dict(), "summary": summary, "lambda": res.weights.lam}, out / "simulation.json", prov)
    write_quantile_grid_csv({"target": target, "synthetic": barycenter(donors, res.weights)}, out / "quantile_grid.csv")
    print(f"sparsity\t{summary['sparsity']:.17g}\nhull_residual\t{summary['hull_residual']:.17g}")


COMMANDS = {
    "fit": cmd_fit,
    "effects": cmd_effects,
    "test": cmd_test,
    "placebo": cmd_placebo,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except InputError as e:
        print(f"dsc {args.command}: error: {e}", file=sys.stderr)
        return 1
    except (DscError, np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"dsc {args.command}: computation failed: {e}", file=sys.stderr)
        return 2
    except (TypeError, ValueError) as e:
        # bad config values that slipped past type conversion
        print(f"dsc {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
