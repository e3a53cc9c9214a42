"""Survey ingestion: parse household / vehicle / trip / EPA tables, join fuel
economy, filter to the analysis sample and emit HouseholdRecords.

Column names come from a schema file (2017 NHTS by default), so another
survey vintage only needs a different mapping.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import yaml

from .core_model import (
    DEFAULT_INCOME_GROUPS,
    HouseholdRecord,
    IncomeGroup,
    TripRecord,
    VehicleRecord,
    fuel_price_per_mile,
    impute_wage,
    summarize_trips,
    weighted_mpg,
)
from .errors import (
    FileNotFound,
    InvalidConfig,
    MalformedData,
    MalformedRow,
    MissingColumn,
    NoTravel,
    UnknownBracketCode,
)

log = logging.getLogger(__name__)

FILTER_RULES = (
    "unreported_income",
    "no_vehicles",
    "missing_vmt",
    "zero_vmt",
    "pre_1984_vehicle",
    "unknown_make_model",
    "no_trip_time",
)


def load_schema(path: Optional[os.PathLike] = None) -> dict:
    """Read a schema file; the packaged 2017 NHTS mapping when path is None."""
    if path is None:
        text = resources.files("cavrebound.data").joinpath("nhts2017_schema.yaml").read_text()
    else:
        path = Path(path)
        if not path.exists():
            raise FileNotFound(path)
        text = path.read_text(encoding="utf-8")
    schema = yaml.safe_load(text)
    if not isinstance(schema, dict) or schema.get("schema_version") != 1:
        raise InvalidConfig("schema file must be a mapping with schema_version: 1")
    for section in ("households", "vehicles", "trips", "epa", "income"):
        if section not in schema:
            raise InvalidConfig(f"schema is missing section {section!r}")
    return schema


# ----------------------------------------------------------------------------
# parsing


@dataclass
class RawTables:
    households: list = field(default_factory=list)  # dicts
    vehicles: list = field(default_factory=list)  # VehicleRecord
    trips: list = field(default_factory=list)  # TripRecord
    epa_mpg: dict = field(default_factory=dict)  # (make, model, year) -> mpg
    errors: list = field(default_factory=list)  # MalformedRow
    orphan_vehicles: int = 0
    orphan_trips: int = 0
    duplicate_households: int = 0


def _read_csv(path, required: Iterable[str]):
    path = Path(path)
    if not path.exists():
        raise FileNotFound(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(path, missing)
        # line 1 is the header
        for lineno, row in enumerate(reader, start=2):
            yield lineno, row


def _num(value: str, missing: set) -> float:
    v = value.strip()
    if v in missing:
        return math.nan
    return float(v)


def _key(make, model, year) -> tuple:
    return (str(make).strip().upper(), str(model).strip().upper(), int(year))


def _check_error_rate(path, errors: list, n_rows: int, max_rate: float) -> None:
    # a single stray row in a tiny file is tolerated
    if errors and len(errors) > max(1.0, max_rate * n_rows):
        raise MalformedData(path, len(errors), n_rows, first=errors[0].message)
    for e in errors:
        log.warning("skipping malformed row %s", e)


def parse_epa(path, schema: dict, max_error_rate: float = 0.01) -> tuple[dict, list]:
    """EPA table -> {(make, model, year): combined mpg}.

    Combined MPG is city_weight * city + (1 - city_weight) * highway; several
    rows for one key (engine / drivetrain variants) are averaged.
    """
    cfg = schema["epa"]
    cols = cfg["columns"]
    w_city = float(cfg.get("city_weight", 0.45))
    combined_col = cols.get("combined")
    required = [cols["make"], cols["model"], cols["model_year"]]
    required += [combined_col] if combined_col else [cols["city"], cols["highway"]]
    sums: dict = {}
    errors = []
    n = 0
    for lineno, row in _read_csv(path, required):
        n += 1
        try:
            key = _key(row[cols["make"]], row[cols["model"]], row[cols["model_year"]])
            if combined_col:
                mpg = float(row[combined_col])
            else:
                mpg = w_city * float(row[cols["city"]]) + (1.0 - w_city) * float(row[cols["highway"]])
            if not mpg > 0:
                raise ValueError(f"non-positive mpg {mpg}")
        except (ValueError, TypeError) as exc:
            errors.append(MalformedRow(path, lineno, str(exc)))
            continue
        s = sums.setdefault(key, [0.0, 0])
        s[0] += mpg
        s[1] += 1
    _check_error_rate(path, errors, n, max_error_rate)
    return {k: s / c for k, (s, c) in sums.items()}, errors


def parse_tables(paths: dict, schema: dict, max_error_rate: Optional[float] = None) -> RawTables:
    """Parse the four input files named in ``paths`` (keys households,
    vehicles, trips, epa).

    Malformed rows are collected in ``RawTables.errors``; a file whose
    malformed share exceeds ``max_error_rate`` aborts with MalformedData.
    """
    if max_error_rate is None:
        max_error_rate = float(schema.get("filters", {}).get("max_error_rate", 0.01))
    missing = set(schema.get("missing_values", []))
    raw = RawTables()

    # households
    hcfg = schema["households"]
    hc = hcfg["columns"]
    controls = hcfg.get("controls", {}) or {}
    gas_scale = float(hcfg.get("gas_price_scale", 1.0))
    required = [hc["id"], hc["income_code"], hc["sample_weight"], hc["gas_price"]]
    required += [c for c in (hc.get("msa"), hc.get("state")) if c]
    required += list(controls.values())
    errors = []
    n = 0
    seen = set()
    path = paths["households"]
    for lineno, row in _read_csv(path, required):
        n += 1
        try:
            hid = row[hc["id"]].strip()
            if not hid:
                raise ValueError("empty household id")
            weight = float(row[hc["sample_weight"]])
            if not weight > 0:
                raise ValueError(f"sample weight must be positive, got {weight}")
            gas = float(row[hc["gas_price"]]) * gas_scale
            if not gas > 0:
                raise ValueError(f"gas price must be positive, got {gas}")
        except (ValueError, TypeError) as exc:
            errors.append(MalformedRow(path, lineno, str(exc)))
            continue
        if hid in seen:
            raw.duplicate_households += 1
            errors.append(MalformedRow(path, lineno, f"duplicate household id {hid}"))
            continue
        seen.add(hid)
        raw.households.append(
            {
                "id": hid,
                "income_code": row[hc["income_code"]].strip(),
                "sample_weight": weight,
                "gas_price": gas,
                "msa": row[hc["msa"]].strip() if hc.get("msa") else "",
                "state": row[hc["state"]].strip() if hc.get("state") else "",
                "controls": {name: row[col].strip() for name, col in controls.items()},
            }
        )
    _check_error_rate(path, errors, n, max_error_rate)
    raw.errors.extend(errors)

    # vehicles
    vc = schema["vehicles"]["columns"]
    required = [vc["household_id"], vc["make"], vc["model"], vc["model_year"], vc["annual_vmt"]]
    errors = []
    n = 0
    path = paths["vehicles"]
    for lineno, row in _read_csv(path, required):
        n += 1
        try:
            vmt = _num(row[vc["annual_vmt"]], missing)
            if vmt < 0:
                raise ValueError(f"negative annual VMT {vmt}")
            year = _num(row[vc["model_year"]], missing)
            raw.vehicles.append(
                VehicleRecord(
                    household_id=row[vc["household_id"]].strip(),
                    annual_vmt=vmt,
                    mpg=None,
                    model_year=-1 if math.isnan(year) else int(year),
                    make=row[vc["make"]].strip(),
                    model=row[vc["model"]].strip(),
                    vehicle_id=row[vc["vehicle_id"]].strip() if vc.get("vehicle_id") else "",
                )
            )
        except (ValueError, TypeError) as exc:
            errors.append(MalformedRow(path, lineno, str(exc)))
    _check_error_rate(path, errors, n, max_error_rate)
    raw.errors.extend(errors)

    # trips
    tcfg = schema["trips"]
    tc = tcfg["columns"]
    dur_scale = float(tcfg.get("duration_scale", 1.0))
    work_codes = {str(c) for c in tcfg.get("work_purposes", [])}
    include = {col: {str(v) for v in vals} for col, vals in (tcfg.get("include") or {}).items()}
    required = [tc["household_id"], tc["duration"], tc["distance"], tc["purpose"], *include]
    errors = []
    n = 0
    path = paths["trips"]
    for lineno, row in _read_csv(path, required):
        n += 1
        if any(row[col].strip() not in vals for col, vals in include.items()):
            continue
        try:
            dur = float(row[tc["duration"]]) * dur_scale
            dist = float(row[tc["distance"]])
            if dur < 0 or dist < 0:
                raise ValueError(f"negative trip duration/distance ({dur}, {dist})")
            purpose = "work" if row[tc["purpose"]].strip() in work_codes else "nonwork"
            raw.trips.append(TripRecord(row[tc["household_id"]].strip(), purpose, dur, dist))
        except (ValueError, TypeError) as exc:
            errors.append(MalformedRow(path, lineno, str(exc)))
    _check_error_rate(path, errors, n, max_error_rate)
    raw.errors.extend(errors)

    raw.epa_mpg, epa_errors = parse_epa(paths["epa"], schema, max_error_rate)
    raw.errors.extend(epa_errors)

    ids = {h["id"] for h in raw.households}
    raw.orphan_vehicles = sum(v.household_id not in ids for v in raw.vehicles)
    raw.orphan_trips = sum(t.household_id not in ids for t in raw.trips)
    return raw


def join_epa_mpg(vehicles: Sequence[VehicleRecord], epa_mpg: dict) -> tuple[list, list]:
    """Attach combined MPG to each vehicle; returns (vehicles, unmatched)."""
    out, unmatched = [], []
    for v in vehicles:
        try:
            mpg = epa_mpg.get(_key(v.make, v.model, v.model_year))
        except ValueError:
            mpg = None
        nv = VehicleRecord(v.household_id, v.annual_vmt, mpg, v.model_year, v.make, v.model, v.vehicle_id)
        out.append(nv)
        if mpg is None:
            unmatched.append(nv)
    return out, unmatched


# ----------------------------------------------------------------------------
# income groups


def assign_income_group(
    code, brackets: dict, unreported: Iterable = (), groups: Sequence[IncomeGroup] = DEFAULT_INCOME_GROUPS
) -> Optional[int]:
    """Map a survey income bracket code to an income-group index.

    Returns None for an unreported code (the household is then dropped by the
    income filter). A bracket straddling two groups is a configuration error.
    """
    code = str(code).strip()
    if code in {str(u) for u in unreported}:
        return None
    if code not in brackets:
        raise UnknownBracketCode(f"unknown income bracket code {code!r}")
    low, high = (float(b) for b in brackets[code])
    for g in groups:
        if g.bracket_low <= low and high <= g.bracket_high:
            return g.index
    raise InvalidConfig(f"income bracket {code!r} [{low}, {high}) straddles income groups")


# ----------------------------------------------------------------------------
# filtering


@dataclass
class FilterReport:
    input_count: int = 0
    retained: int = 0
    dropped: dict = field(default_factory=lambda: {r: 0 for r in FILTER_RULES})
    orphan_vehicles: int = 0
    orphan_trips: int = 0
    malformed_rows: int = 0

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "retained": self.retained,
            "dropped": dict(self.dropped),
            "dropped_total": sum(self.dropped.values()),
            "orphan_vehicles": self.orphan_vehicles,
            "orphan_trips": self.orphan_trips,
            "malformed_rows": self.malformed_rows,
        }


def _sort_key(hid: str):
    return (0, int(hid), "") if hid.isdigit() else (1, 0, hid)


def assemble_households(
    raw: RawTables, schema: dict, groups: Sequence[IncomeGroup] = DEFAULT_INCOME_GROUPS
) -> list[HouseholdRecord]:
    """Join vehicles (with EPA MPG) and trips onto households, sorted by id."""
    vehicles, _ = join_epa_mpg(raw.vehicles, raw.epa_mpg)
    by_hh_v: dict = {}
    for v in vehicles:
        by_hh_v.setdefault(v.household_id, []).append(v)
    by_hh_t: dict = {}
    for t in raw.trips:
        by_hh_t.setdefault(t.household_id, []).append(t)

    inc = schema["income"]
    brackets = {str(k): v for k, v in inc["brackets"].items()}
    unreported = [str(u) for u in inc.get("unreported", [])]
    non_msa = {str(v) for v in schema["households"].get("non_msa_values", [])}
    non_msa |= set(schema.get("missing_values", []))

    records = []
    for h in sorted(raw.households, key=lambda h: _sort_key(h["id"])):
        vs = sorted(by_hh_v.get(h["id"], []), key=lambda v: v.vehicle_id)
        ts = by_hh_t.get(h["id"], [])
        msa = h["msa"]
        cluster = f"msa:{msa}" if msa and msa not in non_msa else f"state:{h['state'] or 'unknown'}"
        records.append(
            HouseholdRecord(
                id=h["id"],
                annual_vmt=sum(v.annual_vmt for v in vs),
                annual_drive_time=math.nan,
                gas_price=h["gas_price"],
                income_group=assign_income_group(h["income_code"], brackets, unreported, groups),
                sample_weight=h["sample_weight"],
                cluster_id=cluster,
                controls=dict(h["controls"]),
                vehicles=vs,
                trips=ts,
            )
        )
    return records


def _drop_rule(rec: HouseholdRecord, min_model_year: int) -> Optional[str]:
    if rec.income_group is None:
        return "unreported_income"
    if not rec.vehicles:
        return "no_vehicles"
    if any(math.isnan(v.annual_vmt) for v in rec.vehicles):
        return "missing_vmt"
    if not sum(v.annual_vmt for v in rec.vehicles) > 0:
        return "zero_vmt"
    driven = [v for v in rec.vehicles if v.annual_vmt > 0]
    if any(v.model_year < min_model_year for v in driven):
        return "pre_1984_vehicle"
    if any(v.mpg is None or not v.mpg > 0 for v in driven):
        return "unknown_make_model"
    try:
        summarize_trips(rec.trips)
    except NoTravel:
        return "no_trip_time"
    return None


def filter_households(
    records: Sequence[HouseholdRecord],
    groups: Sequence[IncomeGroup] = DEFAULT_INCOME_GROUPS,
    min_model_year: int = 1984,
) -> tuple[list[HouseholdRecord], FilterReport]:
    """Apply the analysis-sample rules; each dropped household is charged to
    the first rule it fails. Retained records get their derived cost inputs
    filled in."""
    report = FilterReport(input_count=len(records))
    by_index = {g.index: g for g in groups}
    kept = []
    for rec in records:
        rule = _drop_rule(rec, min_model_year)
        if rule is not None:
            report.dropped[rule] += 1
            continue
        trips = summarize_trips(rec.trips)
        rec.annual_vmt = sum(v.annual_vmt for v in rec.vehicles)
        rec.fuel_cost = fuel_price_per_mile(rec.vehicles, rec.gas_price)
        rec.wage = impute_wage(by_index[rec.income_group])
        rec.work_time_share = trips.work_time_share
        rec.hours_per_mile = trips.hours_per_mile
        rec.annual_drive_time = rec.annual_vmt * trips.hours_per_mile
        kept.append(rec)
    report.retained = len(kept)
    return kept, report


def apply_filters(
    raw: RawTables, schema: dict, groups: Sequence[IncomeGroup] = DEFAULT_INCOME_GROUPS
) -> tuple[list[HouseholdRecord], FilterReport]:
    records = assemble_households(raw, schema, groups)
    min_year = int(schema.get("filters", {}).get("min_model_year", 1984))
    kept, report = filter_households(records, groups, min_year)
    report.orphan_vehicles = raw.orphan_vehicles
    report.orphan_trips = raw.orphan_trips
    report.malformed_rows = len(raw.errors)
    return kept, report


# ----------------------------------------------------------------------------
# canonical household table

CORE_COLUMNS = (
    "id",
    "income_group",
    "sample_weight",
    "cluster_id",
    "annual_vmt",
    "annual_drive_time",
    "gas_price",
    "mpg",
    "fuel_cost",
    "wage",
    "work_time_share",
    "hours_per_mile",
)
CONTROL_PREFIX = "ctl_"


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def write_household_table(path, records: Sequence[HouseholdRecord]) -> None:
    control_names: list = []
    for r in records:
        for name in r.controls:
            if name not in control_names:
                control_names.append(name)
    header = list(CORE_COLUMNS) + [CONTROL_PREFIX + c for c in control_names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in records:
            mpg = weighted_mpg(r.vehicles) if r.vehicles else (
                r.gas_price / r.fuel_cost if r.fuel_cost else math.nan
            )
            row = [
                r.id,
                r.income_group,
                fmt_float(r.sample_weight),
                r.cluster_id,
                fmt_float(r.annual_vmt),
                fmt_float(r.annual_drive_time),
                fmt_float(r.gas_price),
                fmt_float(mpg),
                fmt_float(r.fuel_cost),
                fmt_float(r.wage),
                fmt_float(r.work_time_share),
                fmt_float(r.hours_per_mile),
            ]
            row += [_fmt_control(r.controls.get(c, "")) for c in control_names]
            w.writerow(row)


def _fmt_control(v) -> str:
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def read_household_table(path) -> list[HouseholdRecord]:
    records = []
    for lineno, row in _read_csv(path, CORE_COLUMNS):
        try:
            records.append(
                HouseholdRecord(
                    id=row["id"],
                    annual_vmt=float(row["annual_vmt"]),
                    annual_drive_time=float(row["annual_drive_time"]),
                    gas_price=float(row["gas_price"]),
                    income_group=int(row["income_group"]),
                    sample_weight=float(row["sample_weight"]),
                    cluster_id=row["cluster_id"],
                    controls={
                        k[len(CONTROL_PREFIX):]: v
                        for k, v in row.items()
                        if k.startswith(CONTROL_PREFIX)
                    },
                    fuel_cost=float(row["fuel_cost"]),
                    wage=float(row["wage"]),
                    work_time_share=float(row["work_time_share"]),
                    hours_per_mile=float(row["hours_per_mile"]),
                )
            )
        except (ValueError, TypeError) as exc:
            raise MalformedData(path, 1, lineno - 1, first=f"line {lineno}: {exc}") from exc
    return records


def write_filter_report(path, report: FilterReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
