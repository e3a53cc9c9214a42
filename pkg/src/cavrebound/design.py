"""Design matrices for the four log-log VMT demand models.

    M1: log VMT ~ log p_f            + controls
    M2: log VMT ~ log p_t            + controls
    M3: log VMT ~ log p_f + log p_t  + controls
    M4: log VMT ~ log (p_f + p_t)    + controls

With ``interact_income`` every price column is joined by price x 1{group g}
for g >= 2, so the uninteracted coefficient belongs to the lowest group.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import yaml

from .core_model import TTC_SCENARIOS, HouseholdRecord, TtcScenario
from .errors import (
    EmptyDesign,
    FileNotFound,
    InvalidConfig,
    MissingControl,
    NonPositivePrice,
    UnknownCategoryLevel,
)

PRICE_COLUMNS = {
    "M1": ("log_p_f",),
    "M2": ("log_p_t",),
    "M3": ("log_p_f", "log_p_t"),
    "M4": ("log_pi",),
}
INTERCEPT = "const"
N_INCOME_GROUPS = 5


@dataclass(frozen=True)
class ModelSpec:
    model_id: str = "M3"
    interact_income: bool = False
    control_blocks: Optional[frozenset] = None  # None = every block in the control config
    ttc_scenario: TtcScenario = TTC_SCENARIOS["base"]

    def __post_init__(self):
        mid = str(self.model_id).upper()
        if mid not in PRICE_COLUMNS:
            raise InvalidConfig(f"unknown model {self.model_id!r}; expected one of M1..M4")
        object.__setattr__(self, "model_id", mid)
        if self.control_blocks is not None:
            object.__setattr__(self, "control_blocks", frozenset(self.control_blocks))

    @property
    def price_columns(self) -> tuple:
        return PRICE_COLUMNS[self.model_id]

    def interaction_columns(self, n_groups: int = N_INCOME_GROUPS) -> list:
        if not self.interact_income:
            return []
        return [f"{p}:g{g}" for p in self.price_columns for g in range(2, n_groups + 1)]

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "interact_income": self.interact_income,
            "control_blocks": None if self.control_blocks is None else sorted(self.control_blocks),
            "ttc_scenario": {
                "work_fraction": self.ttc_scenario.work_fraction,
                "nonwork_fraction": self.ttc_scenario.nonwork_fraction,
            },
        }


@dataclass
class DesignMatrix:
    y: np.ndarray
    X: np.ndarray
    w: np.ndarray
    clusters: np.ndarray
    column_names: list
    ids: list = field(default_factory=list)
    groups: Optional[np.ndarray] = None
    excluded: list = field(default_factory=list)  # (id, reason)
    dropped_columns: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.y)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.column_names.index(name)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["id", "y", "weight", "cluster", *self.column_names])
            ids = self.ids or [str(i) for i in range(self.n)]
            for i in range(self.n):
                wr.writerow(
                    [ids[i], format(self.y[i], ".17g"), format(self.w[i], ".17g"), self.clusters[i]]
                    + [format(v, ".17g") for v in self.X[i]]
                )


# ----------------------------------------------------------------------------
# controls


def load_control_config(path=None) -> dict:
    if path is None:
        text = resources.files("cavrebound.data").joinpath("nhts2017_controls.yaml").read_text()
    else:
        path = Path(path)
        if not path.exists():
            raise FileNotFound(path)
        text = path.read_text(encoding="utf-8")
    cfg = yaml.safe_load(text)
    if not isinstance(cfg, dict) or "blocks" not in cfg:
        raise InvalidConfig("control config must define 'blocks'")
    return normalize_control_config(cfg)


def normalize_control_config(cfg: Mapping) -> dict:
    blocks = {}
    for bname, block in (cfg.get("blocks") or {}).items():
        block = block or {}
        blocks[bname] = {
            "numeric": [str(c) for c in block.get("numeric", []) or []],
            "categorical": {
                str(k): [_level(v) for v in levels]
                for k, levels in (block.get("categorical", {}) or {}).items()
            },
        }
    return {
        "missing_values": [str(v) for v in cfg.get("missing_values", [])],
        "blocks": blocks,
    }


def _level(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    if isinstance(v, (np.floating,)) and float(v).is_integer():
        return str(int(v))
    s = str(v).strip()
    # survey files zero-pad some codes ("02")
    if s.lstrip("-").isdigit():
        return str(int(s))
    return s


def _active_blocks(control_config: dict, blocks) -> list:
    names = list(control_config["blocks"])
    if blocks is None:
        return names
    unknown = set(blocks) - set(names)
    if unknown:
        raise InvalidConfig(f"unknown control block(s): {sorted(unknown)}")
    return [b for b in names if b in blocks]


def control_layout(control_config: dict, blocks=None) -> list:
    """Ordered (column name, control, level-or-None) triples."""
    layout = []
    for b in _active_blocks(control_config, blocks):
        block = control_config["blocks"][b]
        for name in block["numeric"]:
            layout.append((name, name, None))
        for name, levels in block["categorical"].items():
            for lev in levels[1:]:
                layout.append((f"{name}={lev}", name, lev))
    return layout


def _control_value(record: HouseholdRecord, name: str):
    if name == "income_group":
        return record.income_group
    return record.controls.get(name)


def encode_controls(record: HouseholdRecord, control_config: dict, blocks=None) -> dict:
    """Named control vector for one household (reference level dropped)."""
    missing = set(control_config["missing_values"])
    out = {}
    for b in _active_blocks(control_config, blocks):
        block = control_config["blocks"][b]
        for name in block["numeric"]:
            v = _control_value(record, name)
            if v is None or _level(v) in missing:
                raise MissingControl(name)
            try:
                x = float(v)
            except (TypeError, ValueError):
                raise MissingControl(name) from None
            if not math.isfinite(x):
                raise MissingControl(name)
            out[name] = x
        for name, levels in block["categorical"].items():
            v = _control_value(record, name)
            if v is None or _level(v) in missing:
                raise MissingControl(name)
            lev = _level(v)
            if lev not in levels:
                raise UnknownCategoryLevel(name, lev)
            for other in levels[1:]:
                out[f"{name}={other}"] = 1.0 if lev == other else 0.0
    return out


def encode_control_columns(raw: Mapping, n: int, control_config: dict, blocks=None):
    """Vectorised encode_controls over columns of raw control values.

    Returns (names, matrix, ok_mask, reasons) where reasons maps a row index
    to the exclusion reason of each rejected row.
    """
    missing = set(control_config["missing_values"])
    layout = control_layout(control_config, blocks)
    M = np.zeros((n, len(layout)))
    ok = np.ones(n, dtype=bool)
    reasons: dict = {}
    col_index = {c[0]: j for j, c in enumerate(layout)}
    for b in _active_blocks(control_config, blocks):
        block = control_config["blocks"][b]
        for name in block["numeric"]:
            if name not in raw:
                raise InvalidConfig(f"control {name!r} not present in data")
            vals = raw[name]
            arr = _as_float(vals, missing)
            bad = ~np.isfinite(arr)
            for i in np.flatnonzero(bad & ok):
                reasons[int(i)] = f"missing control {name}"
            ok &= ~bad
            M[:, col_index[name]] = np.where(bad, 0.0, arr)
        for name, levels in block["categorical"].items():
            if name not in raw:
                raise InvalidConfig(f"control {name!r} not present in data")
            labs = _as_levels(raw[name])
            is_missing = np.isin(labs, list(missing))
            known = np.isin(labs, levels)
            for i in np.flatnonzero(is_missing & ok):
                reasons[int(i)] = f"missing control {name}"
            for i in np.flatnonzero(~is_missing & ~known & ok):
                reasons[int(i)] = f"unknown level {str(labs[i])!r} for control {name}"
            ok &= known & ~is_missing
            for lev in levels[1:]:
                M[:, col_index[f"{name}={lev}"]] = labs == lev
    return [c[0] for c in layout], M, ok, reasons


def _as_float(vals, missing) -> np.ndarray:
    arr = np.asarray(vals)
    if arr.dtype.kind in "fiub":
        return arr.astype(float)
    out = np.empty(len(arr))
    for i, v in enumerate(arr):
        s = _level(v)
        if s in missing:
            out[i] = np.nan
            continue
        try:
            out[i] = float(s)
        except ValueError:
            out[i] = np.nan
    return out


def _as_levels(vals) -> np.ndarray:
    arr = np.asarray(vals)
    if arr.dtype.kind in "iub":
        return arr.astype(str)
    return np.array([_level(v) for v in arr], dtype=object).astype(str)


# ----------------------------------------------------------------------------
# design


def design_from_columns(
    spec: ModelSpec,
    log_vmt: np.ndarray,
    p_f: Optional[np.ndarray],
    p_t: Optional[np.ndarray],
    groups: np.ndarray,
    weights: np.ndarray,
    clusters: np.ndarray,
    controls: Mapping,
    control_config: dict,
    ids: Optional[Sequence] = None,
) -> DesignMatrix:
    """Build the design from column arrays (the record path and the Monte
    Carlo path both end here)."""
    n = len(log_vmt)
    if n == 0:
        raise EmptyDesign("no observations")
    ids = list(ids) if ids is not None else [str(i) for i in range(n)]
    needs_f = spec.model_id in ("M1", "M3", "M4")
    needs_t = spec.model_id in ("M2", "M3", "M4")
    p_f = None if p_f is None else np.asarray(p_f, dtype=float)
    p_t = None if p_t is None else np.asarray(p_t, dtype=float)
    if needs_f:
        _check_positive(p_f, "p_f", ids)
    if needs_t:
        _check_positive(p_t, "p_t", ids)

    prices = {}
    if "log_p_f" in spec.price_columns:
        prices["log_p_f"] = np.log(p_f)
    if "log_p_t" in spec.price_columns:
        prices["log_p_t"] = np.log(p_t)
    if "log_pi" in spec.price_columns:
        prices["log_pi"] = np.log(p_f + p_t)

    groups = np.asarray(groups)
    names = [INTERCEPT] + list(prices)
    cols = [np.ones(n)] + list(prices.values())
    if spec.interact_income:
        for pname, pcol in prices.items():
            for g in range(2, N_INCOME_GROUPS + 1):
                names.append(f"{pname}:g{g}")
                cols.append(pcol * (groups == g))

    cnames, C, ok, reasons = encode_control_columns(controls, n, control_config, spec.control_blocks)
    excluded = [(ids[i], reasons[i]) for i in sorted(reasons)]
    if not ok.any():
        raise EmptyDesign("every observation was excluded by the control encoding")

    n_fixed = len(names)
    X = np.column_stack(cols + [C[:, j] for j in range(C.shape[1])])[ok]
    names = names + cnames
    y = np.asarray(log_vmt, dtype=float)[ok]
    if not np.all(np.isfinite(y)):
        raise NonPositivePrice(ids[int(np.flatnonzero(~np.isfinite(y))[0])], "annual_vmt", "non-positive")

    # constant control columns (levels absent from the sample) carry no information
    keep = list(range(n_fixed))
    dropped = []
    for j in range(n_fixed, X.shape[1]):
        col = X[:, j]
        if X.shape[0] > 0 and np.all(col == col[0]):
            dropped.append(names[j])
        else:
            keep.append(j)
    X = np.ascontiguousarray(X[:, keep])
    names = [names[j] for j in keep]

    return DesignMatrix(
        y=y,
        X=X,
        w=np.asarray(weights, dtype=float)[ok],
        clusters=np.asarray(clusters)[ok],
        column_names=names,
        ids=[ids[i] for i in np.flatnonzero(ok)],
        groups=groups[ok],
        excluded=excluded,
        dropped_columns=dropped,
    )


def _check_positive(arr, column, ids) -> None:
    if arr is None:
        raise NonPositivePrice("?", column, None)
    bad = ~(arr > 0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonPositivePrice(ids[i], column, float(arr[i]))


def build_design(
    records: Sequence[HouseholdRecord],
    spec: ModelSpec,
    control_config: Optional[dict] = None,
) -> DesignMatrix:
    if not records:
        raise EmptyDesign("no household records")
    if control_config is None:
        control_config = load_control_config()
    p_f = np.empty(len(records))
    p_t = np.empty(len(records))
    for i, r in enumerate(records):
        p_f[i] = r.fuel_cost if r.fuel_cost is not None else r.cost_bundle(spec.ttc_scenario).p_f
        p_t[i] = r.time_cost(spec.ttc_scenario) if spec.model_id != "M1" else math.nan
    vmt = np.array([r.annual_vmt for r in records], dtype=float)
    ids = [r.id for r in records]
    bad = ~(vmt > 0)
    if bad.any():
        raise NonPositivePrice(ids[int(np.flatnonzero(bad)[0])], "annual_vmt", float(vmt[bad][0]))

    names = [
        name
        for b in _active_blocks(control_config, spec.control_blocks)
        for name in (*control_config["blocks"][b]["numeric"], *control_config["blocks"][b]["categorical"])
    ]
    controls = {
        name: [_control_value(r, name) if _control_value(r, name) is not None else "" for r in records]
        for name in names
    }
    return design_from_columns(
        spec,
        np.log(vmt),
        p_f,
        None if spec.model_id == "M1" else p_t,
        np.array([r.income_group if r.income_group is not None else 0 for r in records]),
        np.array([r.sample_weight for r in records], dtype=float),
        np.array([r.cluster_id for r in records]),
        controls,
        control_config,
        ids=ids,
    )
