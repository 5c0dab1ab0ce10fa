"""
Panel ingestion, run configuration and result persistence.

Input is a long CSV with header ``unit,period,value``: one row per draw.
Outputs are JSON documents and CSV tables; each carries the run's config
fingerprint and seed. Floats are written with 17 significant digits so a
write/read cycle is exact.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .errors import InputError
from .estimator import PanelDataset
from .quantile import EmpiricalSample
from .solver import FitConfig

__all__ = [
    "RunConfig",
    "load_panel",
    "write_panel_csv",
    "write_json",
    "read_json",
    "write_csv",
    "read_csv",
    "default_workers",
]

HEADER = ["unit", "period", "value"]


def default_workers() -> Optional[int]:
    """Thread count from ``DSC_THREADS``; None when unset."""
    v = os.environ.get("DSC_THREADS")
    if not v:
        return None
    try:
        k = int(v)
    except ValueError:
        raise InputError(f"DSC_THREADS must be an integer, got {v!r}") from None
    return max(k, 1)


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class RunConfig:
    input: Optional[str] = None
    treated_unit: Optional[str] = None
    t0: Optional[int] = None
    fit: FitConfig = field(default_factory=FitConfig)
    B: int = 500
    K: int = 512
    level: float = 0.95
    bandwidth: Optional[float] = None
    seed: int = 0
    time_weights: Optional[tuple] = None
    output_dir: str = "dsc_out"
    max_workers: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.fit, dict):
            object.__setattr__(self, "fit", FitConfig.from_dict(self.fit))
        if self.time_weights is not None:
            object.__setattr__(self, "time_weights", tuple(float(w) for w in self.time_weights))
        if self.B < 1 or self.K < 3:
            raise InputError("B must be >= 1 and K >= 3")
        if not 0 < self.level < 1:
            raise InputError("level must lie in (0, 1)")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise InputError("bandwidth must be positive")
        if self.max_workers is not None and self.max_workers < 1:
            raise InputError("max_workers must be >= 1")

    def require_data(self):
        missing = [k for k in ("input", "treated_unit", "t0") if getattr(self, k) is None]
        if missing:
            raise InputError("missing required setting(s): " + ", ".join(missing))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit"] = self.fit.to_dict()
        d["time_weights"] = None if self.time_weights is None else list(self.time_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InputError("unknown config key(s): " + ", ".join(sorted(extra)))
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config {path}: {e}") from None
        if not isinstance(d, dict):
            raise InputError("config file must hold a JSON object")
        return cls.from_dict(d)

    def updated(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        fit_kw = {k[4:]: kw.pop(k) for k in list(kw) if k.startswith("fit_")}
        cfg = replace(self, **kw)
        if fit_kw:
            cfg = replace(cfg, fit=replace(cfg.fit, **fit_kw))
        return cfg

    def _echo(self) -> dict:
        # where results are written does not change them
        d = self.to_dict()
        d.pop("output_dir")
        return d

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self._echo(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def provenance(self) -> dict:
        return {"fingerprint": self.fingerprint, "seed": self.seed, "config": self._echo()}


# ---------------------------------------------------------------------------
# panel CSV


def _bad_rows(mask: np.ndarray) -> str:
    lines = np.flatnonzero(mask)[:10] + 2  # header is line 1
    more = " ..." if mask.sum() > 10 else ""
    return ", ".join(map(str, lines)) + more


def _exact_floats(col: pd.Series) -> np.ndarray:
    """Parse strings to doubles exactly; unparsable entries become NaN.

    ``pd.to_numeric`` uses a fast parser that can be off in the last bit.
    """
    raw = col.str.strip().to_numpy(dtype=object)
    try:
        return raw.astype(float)
    except ValueError:
        ok = pd.to_numeric(col.str.strip(), errors="coerce").notna().to_numpy()
        out = np.full(raw.size, np.nan)
        out[ok] = raw[ok].astype(float)
        return out


def load_panel(path, treated_unit, t0, periods=None) -> PanelDataset:
    """Read a long ``unit,period,value`` CSV into a balanced panel.

    Unit ids are kept as strings, periods must be integers. Errors name the
    offending line numbers or the missing ``(unit, period)`` cells.
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"cannot read {path}: {e}") from None
    if [c.strip() for c in df.columns] != HEADER:
        raise InputError(f"expected header unit,period,value, got {','.join(df.columns)}")
    df.columns = HEADER
    if df.empty:
        raise InputError("no data rows")
    val = _exact_floats(df["value"])
    bad = ~np.isfinite(val)
    if bad.any():
        raise InputError(f"non-numeric or non-finite value on line(s) {_bad_rows(bad)}")
    per = pd.to_numeric(df["period"].str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(per) | (per != np.round(per))
    if bad.any():
        raise InputError(f"period is not an integer on line(s) {_bad_rows(bad)}")
    unit = df["unit"].str.strip().to_numpy(dtype=object)
    if np.any(unit == ""):
        raise InputError(f"empty unit id on line(s) {_bad_rows(unit == '')}")

    per = per.astype(np.int64)
    units = list(dict.fromkeys(unit))
    all_periods = sorted(set(per.tolist())) if periods is None else list(periods)
    codes = pd.Categorical(unit, categories=units).codes
    order = np.lexsort((val, per, codes))
    key_c, key_p, v = codes[order], per[order], val[order]
    cut = np.flatnonzero((np.diff(key_c) != 0) | (np.diff(key_p) != 0)) + 1
    starts = np.concatenate(([0], cut))
    ends = np.concatenate((cut, [v.size]))
    samples = {}
    for s, e in zip(starts, ends):
        u, t = units[key_c[s]], int(key_p[s])
        samples[(u, t)] = EmpiricalSample(v[s:e], u, t)
    treated = str(treated_unit)
    if treated not in units:
        raise InputError(f"treated unit {treated!r} not found in {path}")
    return PanelDataset(samples, treated, int(t0), tuple(all_periods), tuple(units))


def write_panel_csv(panel: PanelDataset, path) -> None:
    rows = panel.to_frame()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(HEADER) + "\n")
        for u, t, x in rows[HEADER].itertuples(index=False):
            fh.write(f"{u},{t},{_num(x)}\n")


# ---------------------------------------------------------------------------
# JSON / CSV outputs


def _num(x) -> str:
    return format(float(x), ".17g")


def _clean(obj):
    """Make ``obj`` JSON-ready: numpy to builtins, tuples to lists, NaN to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if not math.isfinite(f) else f
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dumps(o, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits (``json`` has no hook for that)."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(o, dict):
        if not o:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_dumps(v, indent + 1)}" for k, v in o.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(o, list):
        if not o:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in o):
            return "[" + ", ".join(_dumps(v) for v in o) + "]"
        return "[\n" + ",\n".join(inner + _dumps(v, indent + 1) for v in o) + "\n" + pad + "]"
    if isinstance(o, float):
        return _num(o)
    return json.dumps(o)


def write_json(obj: dict, path, provenance: Optional[dict] = None) -> None:
    doc = dict(_clean(obj))
    if provenance is not None:
        doc["provenance"] = _clean(provenance)
    Path(path).write_text(_dumps(doc) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(frame: pd.DataFrame, path, provenance: Optional[dict] = None) -> None:
    """CSV with a leading ``# fingerprint=... seed=...`` comment line."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if provenance is not None:
            fh.write(f"# fingerprint={provenance['fingerprint']} seed={provenance['seed']}\n")
        frame.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")
