"""Run configuration: packaged defaults merged with a user YAML file."""
from __future__ import annotations

import copy
import json
import os
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .errors import FileNotFound, InvalidConfig

DATA_DIR_ENV = "CAVREBOUND_DATA_DIR"
SCHEMA_VERSION = 1


def default_config() -> dict:
    text = resources.files("cavrebound.data").joinpath("defaults.yaml").read_text()
    return yaml.safe_load(text)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and out[k]:
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_structured(path) -> dict:
    """Read a JSON or YAML mapping."""
    path = Path(path)
    if not path.exists():
        raise FileNotFound(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InvalidConfig(f"{path}: cannot parse: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: expected a mapping at top level")
    return data


def load_run_config(path=None, overrides: Optional[dict] = None) -> dict:
    cfg = default_config()
    base_dir = Path.cwd()
    if path is not None:
        user = load_structured(path)
        version = user.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise InvalidConfig(f"unsupported config schema_version {version}")
        unknown = set(user) - set(cfg)
        if unknown:
            raise InvalidConfig(f"unknown config key(s): {sorted(unknown)}")
        cfg = _merge(cfg, user)
        base_dir = Path(path).resolve().parent
    if overrides:
        cfg = _merge(cfg, overrides)
    cfg["_base_dir"] = str(base_dir)
    validate_run_config(cfg)
    return cfg


def validate_run_config(cfg: dict) -> None:
    f = cfg["forecast"]
    if str(f["path"]).lower() not in ("m3", "m4"):
        raise InvalidConfig(f"forecast.path must be m3 or m4, got {f['path']!r}")
    if f["convention"] not in ("mpg", "intensity"):
        raise InvalidConfig(f"forecast.convention must be mpg or intensity, got {f['convention']!r}")
    if not float(f["step"]) > 0:
        raise InvalidConfig("forecast.step must be positive")
    if not (float(f["x_min"]) <= float(f["x_max"]) and float(f["x_min"]) > -1):
        raise InvalidConfig("forecast x range is invalid")
    if not (0 <= float(f["y_min"]) <= float(f["y_max"]) < 1):
        raise InvalidConfig("forecast y range must lie within [0, 1)")
    e = cfg["estimate"]
    for m in e["models"]:
        if str(m).lower() not in ("m1", "m2", "m3", "m4"):
            raise InvalidConfig(f"unknown model {m!r}")
    if str(e["correction"]).upper() not in ("CR0", "CR1"):
        raise InvalidConfig(f"estimate.correction must be CR0 or CR1, got {e['correction']!r}")
    if not float(cfg["gge"]["baseline"]) > 0:
        raise InvalidConfig("gge.baseline must be positive")
    stages = cfg["stages"]
    known = {"ingest", "simulate", "estimate", "forecast", "report"}
    if not set(stages) <= known:
        raise InvalidConfig(f"unknown stage(s): {sorted(set(stages) - known)}")
    if "ingest" in stages and "simulate" in stages:
        raise InvalidConfig("choose one data source: ingest or simulate")


def resolve_input(path, cfg: Optional[dict] = None) -> Optional[Path]:
    """Absolute path for an input file: as given if absolute or existing,
    else under data_dir, $CAVREBOUND_DATA_DIR, or the config directory."""
    if path is None:
        return None
    p = Path(os.path.expanduser(str(path)))
    if p.is_absolute() or p.exists():
        return p
    roots = []
    if cfg is not None and cfg.get("data_dir"):
        roots.append(Path(cfg["data_dir"]))
    if os.environ.get(DATA_DIR_ENV):
        roots.append(Path(os.environ[DATA_DIR_ENV]))
    if cfg is not None and cfg.get("_base_dir"):
        roots.append(Path(cfg["_base_dir"]))
    for root in roots:
        if (root / p).exists():
            return root / p
    return roots[0] / p if roots else p
