"""Induced travel, energy rebound and backfire under CAV cost scenarios.

A scenario raises fuel economy by a fraction X and cuts the per-mile travel
time cost by a fraction Y. Induced travel delta = VMT_CAV / VMT_BAU - 1 comes
either from separate fuel and time elasticities ("M3" path) or from one
elasticity on the combined price ("M4" path). Net energy use scales by
(1 + delta) times the per-mile fuel factor; backfire means it rises.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ._kernels import frontier_m3_batch
from .core_model import TTC_SCENARIOS, HouseholdRecord, TtcScenario
from .errors import DomainError, InvalidConfig, NoFrontier, NonMonotone

FRONTIER_TOL = 1e-9
CONVENTIONS = ("mpg", "intensity")


@dataclass(frozen=True)
class Scenario:
    X: float
    Y: float

    def __post_init__(self):
        if not self.X > -1.0:
            raise DomainError(f"fuel economy change X must exceed -1, got {self.X}")
        if not 0.0 <= self.Y < 1.0:
            raise DomainError(f"time cost reduction Y must lie in [0, 1), got {self.Y}")


@dataclass(frozen=True)
class CostShares:
    p_f_base: float
    p_t_base: float

    def __post_init__(self):
        if not (self.p_f_base > 0 and self.p_t_base > 0):
            raise DomainError("baseline fuel and time costs per mile must be positive")

    def to_dict(self) -> dict:
        return {"p_f": self.p_f_base, "p_t": self.p_t_base}

    @classmethod
    def from_dict(cls, d: Mapping) -> "CostShares":
        return cls(float(d["p_f"]), float(d["p_t"]))


def fuel_factor(X, convention: str = "mpg"):
    """Per-mile fuel use (and fuel cost) of a CAV relative to BAU.

    "mpg": MPG rises by X, so per-mile fuel scales by 1/(1+X).
    "intensity": per-mile fuel falls by X, so it scales by (1-X).
    """
    X = np.asarray(X, dtype=float)
    if convention == "mpg":
        if np.any(X <= -1.0):
            raise DomainError("X must exceed -1")
        out = 1.0 / (1.0 + X)
    elif convention == "intensity":
        if np.any(X >= 1.0):
            raise DomainError("X must be below 1 under the intensity convention")
        out = 1.0 - X
    else:
        raise InvalidConfig(f"unknown fuel-economy convention {convention!r}")
    return out[()] if out.ndim == 0 else out


def _check_y(Y):
    Y = np.asarray(Y, dtype=float)
    if np.any(Y >= 1.0) or np.any(Y < 0.0):
        raise DomainError("time cost reduction Y must lie in [0, 1)")
    return Y


def _scalar(a):
    return float(a) if np.ndim(a) == 0 else a


def induced_travel_m3(eps_f: float, eps_t: float, X, Y, convention: str = "mpg"):
    """delta = fuel_factor(X)^eps_f * (1 - Y)^eps_t - 1."""
    if not (math.isfinite(eps_f) and math.isfinite(eps_t)):
        raise DomainError("elasticities must be finite")
    Y = _check_y(Y)
    return _scalar(np.power(fuel_factor(X, convention), eps_f) * np.power(1.0 - Y, eps_t) - 1.0)


def induced_travel_m4(eps_vmt: float, shares: CostShares, X, Y, convention: str = "mpg"):
    """delta = (pi_CAV / pi_BAU)^eps_vmt - 1, pi_CAV = p_f * fuel_factor + p_t * (1 - Y)."""
    if not math.isfinite(eps_vmt):
        raise DomainError("elasticity must be finite")
    Y = _check_y(Y)
    pi_bau = shares.p_f_base + shares.p_t_base
    pi_cav = shares.p_f_base * fuel_factor(X, convention) + shares.p_t_base * (1.0 - Y)
    if np.any(pi_cav <= 0):
        raise DomainError("scenario price per mile is not positive")
    return _scalar(np.power(pi_cav / pi_bau, eps_vmt) - 1.0)


def energy_ratio(delta, X, convention: str = "mpg"):
    """Net energy use relative to BAU: (1 + delta) * fuel_factor(X)."""
    if convention == "mpg":
        return _scalar((1.0 + np.asarray(delta, dtype=float)) / (1.0 + np.asarray(X, dtype=float)))
    return _scalar((1.0 + np.asarray(delta, dtype=float)) * fuel_factor(X, convention))


def breakeven_delta(X, convention: str = "mpg"):
    """Induced travel at which energy savings are exactly offset."""
    if convention == "mpg":
        return X
    return _scalar(1.0 / fuel_factor(X, convention) - 1.0)


def backfire(delta, X, convention: str = "mpg"):
    """Net energy use rises. Under the mpg convention this is exactly delta > X."""
    if convention == "mpg":
        return _scalar(np.asarray(delta) > np.asarray(X))
    return _scalar(np.asarray(energy_ratio(delta, X, convention)) > 1.0)


# ----------------------------------------------------------------------------
# frontier


def _eps(eps, key: str) -> float:
    val = eps.get(key) if isinstance(eps, Mapping) else getattr(eps, key, None)
    if val is None:
        raise InvalidConfig(f"elasticity {key} is required")
    return float(val)


def _delta_fn(eps, path: str, shares: Optional[CostShares], convention: str):
    path = path.upper()
    if path == "M3":
        ef, et = _eps(eps, "eps_f"), _eps(eps, "eps_t")
        if not et < 0:
            raise NonMonotone(f"induced travel does not rise with Y when eps_t = {et}")
        return lambda X, Y: induced_travel_m3(ef, et, X, Y, convention)
    if path == "M4":
        ev = _eps(eps, "eps_vmt")
        if shares is None:
            raise InvalidConfig("the M4 path needs baseline cost shares")
        if not ev < 0:
            raise NonMonotone(f"induced travel does not rise with Y when eps_vmt = {ev}")
        return lambda X, Y: induced_travel_m4(ev, shares, X, Y, convention)
    raise InvalidConfig(f"unknown forecast path {path!r}; expected M3 or M4")


def _bisect(g, tol: float, max_iter: int = 200) -> float:
    """Root of an increasing g on [0, 1) given g(0) <= 0."""
    lo, hi, mid = 0.0, 1.0, 0.5
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) < tol:
            return mid
        if gm > 0.0:
            hi = mid
        else:
            lo = mid
    raise NonMonotone("bisection did not converge; induced travel is not monotone in Y")


def frontier(
    eps,
    X: float,
    path: str = "M3",
    shares: Optional[CostShares] = None,
    convention: str = "mpg",
    tol: float = FRONTIER_TOL,
) -> float:
    """Time cost reduction Y* at which a fuel economy gain X leaves net
    energy use unchanged."""
    if not X > 0:
        raise DomainError(f"frontier needs X > 0, got {X}")
    delta = _delta_fn(eps, path, shares, convention)
    target = breakeven_delta(X, convention)
    g0 = delta(X, 0.0) - target
    if g0 > tol:
        raise NoFrontier(f"backfire already at Y = 0 for X = {X}")
    if abs(g0) < tol:
        return 0.0
    y = _bisect(lambda y: delta(X, y) - target, tol)
    if abs(delta(X, y) - target) >= tol:
        raise NonMonotone("frontier residual above tolerance")
    return y


# ----------------------------------------------------------------------------
# grid


def grid_values(lo: float, hi: float, step: float) -> np.ndarray:
    """lo, lo + step, ..., hi (both endpoints; rounded to 12 decimals)."""
    if not step > 0:
        raise InvalidConfig("grid step must be positive")
    if hi < lo:
        raise InvalidConfig(f"grid range is empty: [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / step + 1e-9))
    vals = np.round(lo + step * np.arange(n + 1), 12)
    if hi - vals[-1] > 1e-9:
        vals = np.append(vals, hi)
    return vals


@dataclass
class ScenarioGrid:
    x_values: np.ndarray
    y_values: np.ndarray
    delta: np.ndarray  # (len(x), len(y))
    energy_ratio: np.ndarray
    backfire: np.ndarray
    frontier: list  # (X, Y* or None)
    path: str = "M3"
    label: str = "overall"
    convention: str = "mpg"
    elasticities: dict = field(default_factory=dict)

    def rows(self):
        for i, x in enumerate(self.x_values):
            for j, y in enumerate(self.y_values):
                yield (self.label, float(x), float(y), float(self.delta[i, j]),
                       float(self.energy_ratio[i, j]), bool(self.backfire[i, j]))

    @property
    def empty(self) -> bool:
        return self.delta.size == 0


def sweep_grid(
    eps,
    x_range: Sequence[float] = (0.05, 0.20),
    y_range: Sequence[float] = (0.0, 0.60),
    step: float = 0.05,
    path: str = "M3",
    shares: Optional[CostShares] = None,
    convention: str = "mpg",
    label: str = "overall",
) -> ScenarioGrid:
    xs = grid_values(x_range[0], x_range[1], step)
    ys = grid_values(y_range[0], y_range[1], step)
    _check_y(ys)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    path = path.upper()
    if path == "M3":
        ef, et = _eps(eps, "eps_f"), _eps(eps, "eps_t")
        delta = induced_travel_m3(ef, et, XX, YY, convention)
        used = {"eps_f": ef, "eps_t": et}
    elif path == "M4":
        if shares is None:
            raise InvalidConfig("the M4 path needs baseline cost shares")
        ev = _eps(eps, "eps_vmt")
        delta = induced_travel_m4(ev, shares, XX, YY, convention)
        used = {"eps_vmt": ev}
    else:
        raise InvalidConfig(f"unknown forecast path {path!r}; expected M3 or M4")
    delta = np.asarray(delta, dtype=float).reshape(XX.shape)
    ratio = np.asarray(energy_ratio(delta, XX, convention)).reshape(XX.shape)
    bf = np.asarray(backfire(delta, XX, convention)).reshape(XX.shape)

    front = []
    pos = xs[xs > 0]
    if path == "M3" and used["eps_t"] < 0 and pos.size:
        ff = np.ascontiguousarray(np.asarray(fuel_factor(pos, convention), dtype=float).reshape(-1))
        tg = np.ascontiguousarray(np.asarray(breakeven_delta(pos, convention), dtype=float).reshape(-1))
        ystar = frontier_m3_batch(ff, tg, used["eps_f"], used["eps_t"], FRONTIER_TOL)
        front = [(float(x), None if math.isnan(y) else float(y)) for x, y in zip(pos, ystar)]
    else:
        for x in pos:
            try:
                front.append((float(x), frontier(eps, float(x), path, shares, convention)))
            except (NoFrontier, NonMonotone):
                front.append((float(x), None))
    return ScenarioGrid(xs, ys, delta, ratio, bf, front, path, label, convention, used)


# ----------------------------------------------------------------------------
# fleet aggregation


@dataclass(frozen=True)
class GgeChange:
    baseline: float
    new_consumption: float
    change: float
    change_usd: float

    @property
    def change_fraction(self) -> float:
        return self.change / self.baseline

    def to_dict(self) -> dict:
        return {
            "baseline_gge": self.baseline,
            "new_consumption_gge": self.new_consumption,
            "change_gge": self.change,
            "change_fraction": self.change_fraction,
            "change_usd": self.change_usd,
        }


def aggregate_gge(
    baseline_gge: float, delta: float, X: float, price_per_gge: float, convention: str = "mpg"
) -> GgeChange:
    """Fleet fuel use after CAV adoption: baseline * energy_ratio(delta, X)."""
    if not baseline_gge > 0:
        raise DomainError("baseline consumption must be positive")
    new = baseline_gge * float(energy_ratio(delta, X, convention))
    change = new - baseline_gge
    return GgeChange(baseline_gge, new, change, change * price_per_gge)


# ----------------------------------------------------------------------------
# baseline cost shares


def cost_shares_from_records(
    records: Sequence[HouseholdRecord], scenario: TtcScenario = TTC_SCENARIOS["base"]
) -> dict:
    """Weighted mean per-mile fuel and time cost, overall and per income group."""
    acc: dict = {}
    for r in records:
        b = r.cost_bundle(scenario)
        for key in ("overall", r.income_group):
            a = acc.setdefault(key, [0.0, 0.0, 0.0])
            a[0] += r.sample_weight * b.p_f
            a[1] += r.sample_weight * b.p_t
            a[2] += r.sample_weight
    out = {}
    for key, (f, t, w) in acc.items():
        if f > 0 and t > 0:
            out[key] = CostShares(f / w, t / w)
    return out


def cost_summary(records: Sequence[HouseholdRecord], scenario: TtcScenario = TTC_SCENARIOS["base"]) -> dict:
    """Weighted means of per-mile fuel, time and combined cost and of the
    hourly time cost, overall and per income group."""
    acc: dict = {}
    for r in records:
        b = r.cost_bundle(scenario)
        hourly = r.hourly_time_cost(scenario)
        for key in ("overall", r.income_group):
            a = acc.setdefault(key, np.zeros(6))
            a += (r.sample_weight * b.p_f, r.sample_weight * b.p_t, r.sample_weight * b.pi,
                  r.sample_weight * hourly, r.sample_weight, 1.0)
    out = {}
    for key in sorted(acc, key=lambda k: (k != "overall", str(k))):
        f, t, p, h, w, n = acc[key]
        out[str(key)] = {
            "p_f": f / w,
            "p_t": t / w,
            "pi": p / w,
            "time_cost_per_hour": h / w,
            "households": int(n),
        }
    return out
