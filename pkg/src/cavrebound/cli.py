"""Command line interface.

    cavrebound ingest      survey CSVs -> canonical household table
    cavrebound simulate    synthetic household table
    cavrebound estimate    fit one demand model
    cavrebound forecast    induced-travel grid, break-even frontier, fleet fuel use
    cavrebound frontier    break-even time cost reduction for one X
    cavrebound mc-recovery Monte Carlo check of the estimator
    cavrebound report      text tables from earlier outputs
    cavrebound run         the configured pipeline end to end

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import __version__
from ._kernels import BACKEND
from .config import load_run_config, load_structured, resolve_input
from .core_model import income_groups_from_averages, ttc_scenario
from .design import ModelSpec, build_design, load_control_config, normalize_control_config
from .errors import CavReboundError, FileNotFound, InvalidConfig, NoFrontier
from .estimator import ElasticitySet, FitResult, extract_elasticities, fit_model
from .forecast import (
    CostShares,
    ScenarioGrid,
    aggregate_gge,
    cost_shares_from_records,
    cost_summary,
    frontier,
    sweep_grid,
)
from .ingest import (
    apply_filters,
    fmt_float,
    load_schema,
    parse_tables,
    read_household_table,
    write_filter_report,
    write_household_table,
)
from .report import emit_report
from .synthetic import SYNTHETIC_CONTROLS, SyntheticConfig, generate_population, monte_carlo_recovery

log = logging.getLogger("cavrebound")

HOUSEHOLDS_FILE = "households.csv"
CONTROLS_FILE = "controls.yaml"
CURRENCY_NOTE = "nominal USD of the survey year; no CPI adjustment"


# ----------------------------------------------------------------------------
# output helpers


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, inputs: Sequence, outputs: Sequence, extra: Optional[dict] = None) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "kernel_backend": BACKEND,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "inputs": {str(p): sha256(p) for p in inputs if p is not None and Path(p).is_file()},
        "outputs": sorted(str(p) for p in outputs),
    }
    if extra:
        manifest.update(extra)
    write_json(Path(out_dir) / "manifest.json", manifest)


def write_grid_csv(path, grids: Sequence[ScenarioGrid]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "X", "Y", "delta", "energy_ratio", "backfire"])
        for g in grids:
            for label, x, y, d, r, b in g.rows():
                w.writerow([label, fmt_float(x), fmt_float(y), fmt_float(d), fmt_float(r), int(b)])


def write_frontier_csv(path, grids: Sequence[ScenarioGrid]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "X", "Y_star"])
        for g in grids:
            for x, y in g.frontier:
                w.writerow([g.label, fmt_float(x), "" if y is None else fmt_float(y)])


def read_grid_csv(grid_path, frontier_path=None, path: str = "M3") -> list[ScenarioGrid]:
    grid_path = Path(grid_path)
    if not grid_path.exists():
        raise FileNotFound(grid_path)
    rows: dict = {}
    with open(grid_path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(r["group"], []).append(r)
    fronts: dict = {}
    if frontier_path is not None and Path(frontier_path).exists():
        with open(frontier_path, newline="", encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                fronts.setdefault(r["group"], []).append(
                    (float(r["X"]), float(r["Y_star"]) if r["Y_star"] else None)
                )
    grids = []
    for label, rs in rows.items():
        xs = np.array(sorted({float(r["X"]) for r in rs}))
        ys = np.array(sorted({float(r["Y"]) for r in rs}))
        shape = (len(xs), len(ys))
        delta, ratio, bf = np.zeros(shape), np.zeros(shape), np.zeros(shape, dtype=bool)
        for r in rs:
            i = int(np.searchsorted(xs, float(r["X"])))
            j = int(np.searchsorted(ys, float(r["Y"])))
            delta[i, j] = float(r["delta"])
            ratio[i, j] = float(r["energy_ratio"])
            bf[i, j] = r["backfire"] == "1"
        grids.append(ScenarioGrid(xs, ys, delta, ratio, bf, fronts.get(label, []), path, label))
    return grids


# ----------------------------------------------------------------------------
# stage implementations


def _controls_for(data_dir: Path, controls_path=None) -> dict:
    if controls_path is not None:
        return load_control_config(controls_path)
    local = data_dir / CONTROLS_FILE
    if local.exists():
        return load_control_config(local)
    return load_control_config()


def do_ingest(paths: dict, schema_path, out_dir, averages=None) -> list:
    schema = load_schema(schema_path)
    groups = income_groups_from_averages(averages) if averages else income_groups_from_averages(
        [19447, 40976, 64563, 106173, 180674]
    )
    raw = parse_tables(paths, schema)
    records, report = apply_filters(raw, schema, groups)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_household_table(out_dir / HOUSEHOLDS_FILE, records)
    write_filter_report(out_dir / "filter_report.json", report)
    log.info("ingest: retained %d of %d households", report.retained, report.input_count)
    return [out_dir / HOUSEHOLDS_FILE, out_dir / "filter_report.json"]


def do_simulate(syn: SyntheticConfig, out_dir) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = generate_population(syn)
    write_household_table(out_dir / HOUSEHOLDS_FILE, records)
    controls = {
        "schema_version": 1,
        "missing_values": SYNTHETIC_CONTROLS["missing_values"],
        "blocks": SYNTHETIC_CONTROLS["blocks"],
    }
    (out_dir / CONTROLS_FILE).write_text(yaml.safe_dump(controls, sort_keys=False), encoding="utf-8")
    (out_dir / "synthetic_config.yaml").write_text(
        yaml.safe_dump(syn.to_dict(), sort_keys=True), encoding="utf-8"
    )
    return [out_dir / HOUSEHOLDS_FILE, out_dir / CONTROLS_FILE, out_dir / "synthetic_config.yaml"]


def do_estimate(records, spec: ModelSpec, control_config: dict, correction: str = "CR1") -> dict:
    design = build_design(records, spec, control_config)
    fit = fit_model(design, spec, correction)
    es = extract_elasticities(fit, spec)
    shares = cost_shares_from_records(records, spec.ttc_scenario)
    return {
        "fit": fit.to_dict(),
        "elasticities": es.to_dict(),
        "cost_shares": {str(k): v.to_dict() for k, v in shares.items()},
        "cost_summary": cost_summary(records, spec.ttc_scenario),
        "excluded_rows": [list(e) for e in design.excluded],
        "metadata": {"currency": CURRENCY_NOTE, "p_value_method": "normal approximation"},
    }


def _parse_groups(sel) -> list:
    if sel is None or str(sel).lower() == "all":
        return ["overall", 1, 2, 3, 4, 5]
    out = []
    for part in str(sel).split(","):
        part = part.strip().lower()
        if part == "overall":
            out.append("overall")
        elif part.isdigit():
            out.append(int(part))
        elif part:
            raise InvalidConfig(f"bad group selector {part!r}")
    return out


def load_elasticities(src) -> ElasticitySet:
    if isinstance(src, dict):
        return ElasticitySet.from_dict(src)
    return ElasticitySet.from_dict(load_structured(src))


def load_shares(src) -> dict:
    if src is None:
        return {}
    data = src if isinstance(src, dict) else load_structured(src)
    if "cost_shares" in data:
        data = data["cost_shares"]
    if "p_f" in data:
        data = {"overall": data}
    # other keys (e.g. elasticities sharing the file) are ignored
    return {
        ("overall" if str(k) == "overall" else int(k)): CostShares.from_dict(v)
        for k, v in data.items()
        if isinstance(v, dict) and "p_f" in v
    }


def do_forecast(es: ElasticitySet, shares: dict, fcfg: dict, gge_cfg: dict) -> tuple[list, dict, list]:
    path = str(fcfg["path"]).upper()
    need = ("eps_f", "eps_t") if path == "M3" else ("eps_vmt",)
    grids, notes = [], []
    for target in _parse_groups(fcfg.get("groups")):
        eps = es.overall() if target == "overall" else es.per_group.get(target, {})
        if not all(eps.get(k) is not None for k in need):
            notes.append(f"{target}: elasticities {', '.join(need)} not available; skipped")
            continue
        sh = None
        if path == "M4":
            sh = shares.get(target, shares.get("overall"))
            if sh is None:
                notes.append(f"{target}: no baseline cost shares for the M4 path; skipped")
                continue
        label = target if target == "overall" else f"group{target}"
        grids.append(
            sweep_grid(
                eps,
                (float(fcfg["x_min"]), float(fcfg["x_max"])),
                (float(fcfg["y_min"]), float(fcfg["y_max"])),
                float(fcfg["step"]),
                path,
                sh,
                fcfg.get("convention", "mpg"),
                label,
            )
        )
    baseline = float(gge_cfg["baseline"])
    price = float(gge_cfg["price_per_gge"])
    gge = {"baseline_gge": baseline, "price_per_gge": price, "currency": CURRENCY_NOTE, "scenarios": {}}
    for g in grids:
        if g.empty:
            continue
        entry = {}
        for tag, idx in (("lowest_energy", g.energy_ratio.argmin()), ("highest_energy", g.energy_ratio.argmax())):
            i, j = divmod(int(idx), g.delta.shape[1])
            x, y, d = float(g.x_values[i]), float(g.y_values[j]), float(g.delta[i, j])
            ch = aggregate_gge(baseline, d, x, price, g.convention)
            entry[tag] = {"X": x, "Y": y, "delta": d, **ch.to_dict()}
        gge["scenarios"][g.label] = entry
    return grids, gge, notes


def write_forecast(out_dir, grids, gge) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_grid_csv(out_dir / "grid.csv", grids)
    write_frontier_csv(out_dir / "frontier.csv", grids)
    write_json(out_dir / "gge.json", gge)
    return [out_dir / "grid.csv", out_dir / "frontier.csv", out_dir / "gge.json"]


def _fit_label(fit: FitResult) -> str:
    if fit.spec is None:
        return "model"
    return f"Model {fit.spec.model_id[1]}" + (" x income" if fit.spec.interact_income else "")


def build_report(estimates: Sequence[dict], grids: Sequence[ScenarioGrid], notes=()) -> str:
    fits, group_sets = {}, {}
    for est in estimates:
        fit = FitResult.from_dict(est["fit"])
        label = _fit_label(fit)
        if fit.spec is not None and fit.spec.interact_income:
            group_sets[label] = ElasticitySet.from_dict(est)
        else:
            fits[label] = fit
    notes = list(notes)
    for est in estimates:
        summ = est.get("cost_summary", {}).get("overall")
        if summ:
            notes.append(
                f"weighted mean travel time cost: {summ['time_cost_per_hour']:.2f} USD/hour; "
                f"fuel {summ['p_f']:.4f}, time {summ['p_t']:.4f} USD/mile ({CURRENCY_NOTE})"
            )
            break
    return emit_report(fits, group_sets, grids, notes)


# ----------------------------------------------------------------------------
# subcommands


def _cfg(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return load_run_config(args.config, overrides or None)


def _synthetic_config(cfg: dict) -> SyntheticConfig:
    data = dict(cfg.get("synthetic") or {})
    if "seed" not in data or cfg.get("_seed_override"):
        data["seed"] = int(cfg["seed"])
    return SyntheticConfig.from_dict(data)


def cmd_ingest(args) -> int:
    cfg = _cfg(args)
    p = cfg["paths"]
    paths = {
        k: resolve_input(getattr(args, k) or p.get(k), cfg)
        for k in ("households", "vehicles", "trips", "epa")
    }
    for k, v in paths.items():
        if v is None:
            raise InvalidConfig(f"no {k} file given")
    schema = resolve_input(args.schema or p.get("schema"), cfg)
    out = Path(args.out or Path(cfg["out_dir"]) / "data")
    outputs = do_ingest(paths, schema, out, cfg["income_groups"]["average_income"])
    write_manifest(out, "ingest", [*paths.values(), schema], outputs)
    return 0


def cmd_simulate(args) -> int:
    cfg = _cfg(args)
    if args.seed is not None:
        cfg["_seed_override"] = True
    out = Path(args.out or Path(cfg["out_dir"]) / "data")
    outputs = do_simulate(_synthetic_config(cfg), out)
    write_manifest(out, "simulate", [args.config], outputs)
    return 0


def cmd_estimate(args) -> int:
    cfg = _cfg(args)
    e = cfg["estimate"]
    data_dir = Path(args.data)
    table = data_dir / HOUSEHOLDS_FILE
    records = read_household_table(table)
    spec = ModelSpec(
        (args.model or "m3").upper(),
        bool(args.interact_income),
        ttc_scenario=ttc_scenario(args.ttc_scenario or e["ttc_scenario"]),
    )
    controls_path = resolve_input(args.controls or cfg["paths"].get("controls"), cfg)
    result = do_estimate(records, spec, _controls_for(data_dir, controls_path), args.correction or e["correction"])
    write_json(args.out, result)
    print(build_report([result], []).split("\n\n== Induced")[0])
    return 0


def cmd_forecast(args) -> int:
    cfg = _cfg(args)
    f = dict(cfg["forecast"])
    for key in ("path", "x_min", "x_max", "y_min", "y_max", "step", "convention", "groups"):
        v = getattr(args, key, None)
        if v is not None:
            f[key] = v
    es = load_elasticities(resolve_input(args.elasticities, cfg) if args.elasticities else f["elasticities"])
    shares_src = args.shares or f.get("shares")
    if shares_src is None and args.elasticities:
        shares_src = resolve_input(args.elasticities, cfg)
    shares = load_shares(resolve_input(shares_src, cfg) if isinstance(shares_src, str) else shares_src)
    grids, gge, notes = do_forecast(es, shares, f, cfg["gge"])
    for n in notes:
        log.warning(n)
    out = Path(args.out or Path(cfg["out_dir"]) / "forecast")
    outputs = write_forecast(out, grids, gge)
    write_manifest(out, "forecast", [args.elasticities, args.shares], outputs)
    print(build_report([], grids).split("== Induced travel and backfire ==\n")[1], end="")
    return 0


def cmd_frontier(args) -> int:
    cfg = _cfg(args)
    es = load_elasticities(resolve_input(args.elasticities, cfg))
    path = (args.path or cfg["forecast"]["path"]).upper()
    group = args.group or "overall"
    eps = es.overall() if group == "overall" else es.per_group.get(int(group), {})
    shares = None
    if path == "M4":
        sm = load_shares(resolve_input(args.shares or args.elasticities, cfg))
        shares = sm.get("overall" if group == "overall" else int(group), sm.get("overall"))
    conv = args.convention or cfg["forecast"]["convention"]
    try:
        y = frontier(eps, float(args.x), path, shares, conv)
    except NoFrontier as exc:
        print(json.dumps({"X": float(args.x), "Y_star": None, "group": group, "reason": str(exc)}))
        raise
    print(json.dumps({"X": float(args.x), "Y_star": y, "group": group, "path": path, "convention": conv}))
    return 0


def cmd_mc_recovery(args) -> int:
    cfg = _cfg(args)
    if args.seed is not None:
        cfg["_seed_override"] = True
    syn = _synthetic_config(cfg)
    spec = ModelSpec((args.model or "m3").upper(), bool(args.interact_income))
    rep = monte_carlo_recovery(syn, int(args.reps), spec, n_jobs=int(args.n_jobs))
    write_json(args.out, rep.to_dict())
    for name, s in rep.coefficients.items():
        print(f"{name}: truth {s['truth']:+.4f} mean {s['mean']:+.4f} sd {s['sd']:.4f} "
              f"mean se {s['mean_se']:.4f} coverage {s['coverage']:.3f}")
    if rep.ovb:
        print(f"|eps_f(M1)| > |eps_f(M3)| in {rep.ovb['share_m1_larger_in_magnitude']:.1%} of replications")
    return 0


def cmd_report(args) -> int:
    estimates = [load_structured(p) for p in (args.fit or [])]
    grids = []
    if args.forecast_dir:
        d = Path(args.forecast_dir)
        grids = read_grid_csv(d / "grid.csv", d / "frontier.csv")
    text = build_report(estimates, grids)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def run_pipeline(cfg: dict) -> int:
    """Run the configured stages in order, writing under cfg['out_dir']."""
    out = Path(cfg["out_dir"])
    if not out.is_absolute():
        out = Path(cfg.get("_base_dir", ".")) / out
    stages = list(cfg["stages"])
    data_dir = out / "data"
    inputs, outputs = [], []
    estimates: dict = {}
    grids: list = []
    notes: list = []

    if "ingest" in stages:
        p = cfg["paths"]
        paths = {k: resolve_input(p.get(k), cfg) for k in ("households", "vehicles", "trips", "epa")}
        missing = [k for k, v in paths.items() if v is None]
        if missing:
            raise InvalidConfig(f"paths.{missing[0]} is required for the ingest stage")
        schema = resolve_input(p.get("schema"), cfg)
        inputs += [*paths.values(), schema]
        outputs += do_ingest(paths, schema, data_dir, cfg["income_groups"]["average_income"])
    elif "simulate" in stages:
        outputs += do_simulate(_synthetic_config(cfg), data_dir)

    if "estimate" in stages:
        records = read_household_table(data_dir / HOUSEHOLDS_FILE)
        e = cfg["estimate"]
        controls_path = resolve_input(cfg["paths"].get("controls"), cfg)
        controls = _controls_for(data_dir, controls_path)
        scen = ttc_scenario(e["ttc_scenario"])
        for m in e["models"]:
            m = str(m).lower()
            variants = [False] + ([True] if e["interact_income"] and m in ("m3", "m4") else [])
            for inter in variants:
                spec = ModelSpec(m.upper(), inter, ttc_scenario=scen)
                name = m + ("_income" if inter else "")
                estimates[name] = do_estimate(records, spec, controls, e["correction"])
                write_json(out / "fits" / f"{name}.json", estimates[name])
                outputs.append(out / "fits" / f"{name}.json")

    if "forecast" in stages:
        f = cfg["forecast"]
        path = str(f["path"]).lower()
        if f.get("elasticities") is not None:
            src = f["elasticities"]
            es = load_elasticities(src if isinstance(src, dict) else resolve_input(src, cfg))
        elif path in estimates:
            es = ElasticitySet.from_dict(estimates[path])
            if path + "_income" in estimates:
                grouped = ElasticitySet.from_dict(estimates[path + "_income"])
                es = ElasticitySet(es.eps_f, es.eps_t, es.eps_vmt, es.se, grouped.per_group, grouped.per_group_se)
        else:
            raise InvalidConfig("forecast stage needs forecast.elasticities or an estimate of the chosen path")
        shares_src = f.get("shares")
        if shares_src is not None:
            shares = load_shares(shares_src if isinstance(shares_src, dict) else resolve_input(shares_src, cfg))
        elif path in estimates:
            shares = load_shares(estimates[path])
        else:
            shares = {}
        grids, gge, notes = do_forecast(es, shares, f, cfg["gge"])
        outputs += write_forecast(out / "forecast", grids, gge)

    if "report" in stages:
        text = build_report(list(estimates.values()), grids, notes)
        (out / "report.txt").write_text(text, encoding="utf-8")
        outputs.append(out / "report.txt")
        (out / "table_elasticities.txt").write_text(text.split("\n\n== Induced")[0] + "\n", encoding="utf-8")
        outputs.append(out / "table_elasticities.txt")

    write_manifest(out, "run", inputs, [str(Path(o).relative_to(out)) for o in outputs],
                   {"stages": stages, "seed": cfg["seed"]})
    return 0


def cmd_run(args) -> int:
    cfg = _cfg(args)
    if args.seed is not None:
        cfg["_seed_override"] = True
    return run_pipeline(cfg)


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cavrebound", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="run config (YAML or JSON)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "parse, join and filter survey tables")
    for k in ("households", "vehicles", "trips", "epa", "schema"):
        p.add_argument(f"--{k}")
    p.add_argument("--out", help="output directory")

    p = add("simulate", cmd_simulate, "write a synthetic household table")
    p.add_argument("--out", help="output directory")

    p = add("estimate", cmd_estimate, "fit one demand model")
    p.add_argument("--data", required=True, help="directory holding households.csv")
    p.add_argument("--model", choices=["m1", "m2", "m3", "m4"], type=str.lower)
    p.add_argument("--interact-income", action="store_true")
    p.add_argument("--ttc-scenario", choices=["base", "s1", "s2"])
    p.add_argument("--correction", choices=["CR0", "CR1"], type=str.upper)
    p.add_argument("--controls", help="control vector definition (YAML)")
    p.add_argument("--out", required=True, help="fit JSON")

    def forecast_opts(p):
        p.add_argument("--elasticities", help="fit JSON or elasticities mapping (JSON/YAML)")
        p.add_argument("--path", choices=["m3", "m4"], type=str.lower)
        p.add_argument("--shares", help="baseline cost shares (JSON/YAML)")
        p.add_argument("--convention", choices=["mpg", "intensity"])

    p = add("forecast", cmd_forecast, "induced travel grid and frontier")
    forecast_opts(p)
    for k in ("x-min", "x-max", "y-min", "y-max", "step"):
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--groups", help="all, overall, or a comma list of groups")
    p.add_argument("--out", help="output directory")

    p = add("frontier", cmd_frontier, "break-even time cost reduction for one X")
    forecast_opts(p)
    p.add_argument("--x", required=True, type=float)
    p.add_argument("--group", help="overall or an income group index")

    p = add("mc-recovery", cmd_mc_recovery, "Monte Carlo recovery of known elasticities")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--model", choices=["m1", "m2", "m3", "m4"], type=str.lower)
    p.add_argument("--interact-income", action="store_true")
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = add("report", cmd_report, "text tables from earlier outputs")
    p.add_argument("--fit", nargs="*", help="fit JSON files")
    p.add_argument("--forecast-dir", help="directory with grid.csv / frontier.csv")
    p.add_argument("--out")

    add("run", cmd_run, "run the configured pipeline")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "run" and args.config is None:
        parser.error("run needs --config")
    try:
        return args.func(args)
    except CavReboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
