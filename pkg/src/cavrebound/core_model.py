"""Domain types and closed-form cost and demand formulas.

Per-mile fuel cost, imputed wage, per-mile travel-time cost and the
constant-elasticity VMT demand implied by utility -(VMT*xi)**alpha + y under
joint income and time budgets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import (
    DomainError,
    EmptyFleet,
    InvalidConfig,
    InvalidMpg,
    NonPositiveFuelPrice,
    NoTravel,
)

WORK_HOURS_PER_YEAR = 2080.0


@dataclass(frozen=True)
class IncomeGroup:
    index: int
    bracket_low: float
    bracket_high: float  # math.inf for the top group
    average_income: float

    def contains(self, income: float) -> bool:
        return self.bracket_low <= income < self.bracket_high


# Five groups collapsed from the eleven survey brackets; average incomes are
# the 2016 Consumer Expenditure Survey values and can be overridden.
DEFAULT_INCOME_GROUPS = (
    IncomeGroup(1, 0.0, 25_000.0, 19_447.0),
    IncomeGroup(2, 25_000.0, 50_000.0, 40_976.0),
    IncomeGroup(3, 50_000.0, 75_000.0, 64_563.0),
    IncomeGroup(4, 75_000.0, 125_000.0, 106_173.0),
    IncomeGroup(5, 125_000.0, math.inf, 180_674.0),
)


def validate_income_groups(groups: Sequence[IncomeGroup]) -> None:
    """Raise InvalidConfig unless the groups tile [0, inf) in index order."""
    if not groups:
        raise InvalidConfig("income group table is empty")
    prev_high = 0.0
    for expected, g in enumerate(groups, start=1):
        if g.index != expected:
            raise InvalidConfig(f"income groups must be indexed 1..n in order, got {g.index}")
        if g.bracket_low != prev_high:
            raise InvalidConfig(
                f"income group {g.index} starts at {g.bracket_low}, expected {prev_high}"
            )
        if not g.bracket_high > g.bracket_low:
            raise InvalidConfig(f"income group {g.index} has an empty bracket")
        if not g.contains(g.average_income):
            raise InvalidConfig(
                f"income group {g.index}: average income {g.average_income} outside bracket"
            )
        prev_high = g.bracket_high
    if prev_high != math.inf:
        raise InvalidConfig("last income group must be open-ended")


def income_groups_from_averages(averages: Sequence[float]) -> tuple[IncomeGroup, ...]:
    """Default brackets with overridden average incomes."""
    if len(averages) != len(DEFAULT_INCOME_GROUPS):
        raise InvalidConfig(
            f"expected {len(DEFAULT_INCOME_GROUPS)} average incomes, got {len(averages)}"
        )
    groups = tuple(
        IncomeGroup(g.index, g.bracket_low, g.bracket_high, float(a))
        for g, a in zip(DEFAULT_INCOME_GROUPS, averages)
    )
    validate_income_groups(groups)
    return groups


@dataclass
class VehicleRecord:
    household_id: str
    annual_vmt: float
    mpg: Optional[float]
    model_year: int
    make: str = ""
    model: str = ""
    vehicle_id: str = ""


@dataclass
class TripRecord:
    household_id: str
    purpose_class: str  # "work" or "nonwork"
    duration: float  # hours
    distance: float  # miles

    def __post_init__(self):
        if self.purpose_class not in ("work", "nonwork"):
            raise ValueError(f"purpose_class must be 'work' or 'nonwork', got {self.purpose_class!r}")
        if self.duration < 0 or self.distance < 0:
            raise ValueError("trip duration and distance must be non-negative")


@dataclass(frozen=True)
class TtcScenario:
    """Share of the hourly wage assigned to work and non-work driving time."""

    work_fraction: float = 1.0
    nonwork_fraction: float = 0.5

    def __post_init__(self):
        for v in (self.work_fraction, self.nonwork_fraction):
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"TTC fractions must lie in [0, 1], got {v}")

    def hourly_share(self, work_time_share: float) -> float:
        return (
            self.work_fraction * work_time_share
            + self.nonwork_fraction * (1.0 - work_time_share)
        )


TTC_SCENARIOS = {
    "base": TtcScenario(1.0, 0.5),
    "s1": TtcScenario(1.0, 1.0),
    "s2": TtcScenario(0.5, 0.5),
}


def ttc_scenario(name: str) -> TtcScenario:
    try:
        return TTC_SCENARIOS[name]
    except KeyError:
        raise InvalidConfig(
            f"unknown TTC scenario {name!r}; choose from {sorted(TTC_SCENARIOS)}"
        ) from None


@dataclass(frozen=True)
class CostBundle:
    p_f: float
    p_t: float
    pi: float


def combined_price(p_f: float, p_t: float) -> CostBundle:
    if not p_f > 0:
        raise NonPositiveFuelPrice(f"fuel price per mile must be positive, got {p_f}")
    if not p_t >= 0:
        raise DomainError(f"time cost per mile must be non-negative, got {p_t}")
    return CostBundle(p_f, p_t, p_f + p_t)


def fuel_price_per_mile(vehicles: Sequence[VehicleRecord], gas_price: float) -> float:
    """Gas price times the household's VMT-weighted gallons per mile."""
    if not gas_price > 0:
        raise NonPositiveFuelPrice(f"gas price must be positive, got {gas_price}")
    total_vmt = 0.0
    gallons = 0.0
    for v in vehicles:
        if v.annual_vmt <= 0:
            continue
        if v.mpg is None or not v.mpg > 0:
            raise InvalidMpg(f"vehicle {v.vehicle_id or '?'} of household {v.household_id}: mpg={v.mpg}")
        total_vmt += v.annual_vmt
        gallons += v.annual_vmt / v.mpg
    if total_vmt <= 0:
        raise EmptyFleet("household fleet has zero total VMT")
    return gas_price * gallons / total_vmt


def weighted_mpg(vehicles: Sequence[VehicleRecord]) -> float:
    """VMT-weighted harmonic mean MPG, so that gas_price / weighted_mpg is the
    per-mile fuel price."""
    return fuel_price_per_mile(vehicles, 1.0) ** -1


def impute_wage(group: IncomeGroup) -> float:
    if not group.average_income > 0:
        raise DomainError(f"income group {group.index} has non-positive average income")
    return group.average_income / WORK_HOURS_PER_YEAR


@dataclass(frozen=True)
class TripSummary:
    total_hours: float
    total_miles: float
    work_time_share: float

    @property
    def hours_per_mile(self) -> float:
        return self.total_hours / self.total_miles


def summarize_trips(trips: Sequence[TripRecord]) -> TripSummary:
    hours = sum(t.duration for t in trips)
    miles = sum(t.distance for t in trips)
    if not miles > 0 or not hours > 0:
        raise NoTravel(f"no recorded travel (hours={hours}, miles={miles})")
    work = sum(t.duration for t in trips if t.purpose_class == "work")
    return TripSummary(hours, miles, work / hours)


def time_cost_per_hour(
    trips: Sequence[TripRecord], wage: float, scenario: TtcScenario = TTC_SCENARIOS["base"]
) -> float:
    hours = sum(t.duration for t in trips)
    if not hours > 0:
        raise NoTravel("no recorded travel time")
    work = sum(t.duration for t in trips if t.purpose_class == "work")
    return scenario.hourly_share(work / hours) * wage


def time_cost_per_mile(
    trips: Sequence[TripRecord], wage: float, scenario: TtcScenario = TTC_SCENARIOS["base"]
) -> float:
    if not wage > 0:
        raise DomainError(f"wage must be positive, got {wage}")
    s = summarize_trips(trips)
    return scenario.hourly_share(s.work_time_share) * wage * s.total_hours / s.total_miles


def structural_vmt(alpha: float, xi: float, t_y: float, wage: float, pi: float) -> float:
    """Optimal VMT under the constant-elasticity utility; the price
    elasticity is -1 / (1 - alpha)."""
    if not alpha < 0:
        raise DomainError(f"alpha must be negative, got {alpha}")
    if not pi > 0:
        raise DomainError(f"price per mile must be positive, got {pi}")
    if not xi > 0:
        raise DomainError(f"vehicle quality must be positive, got {xi}")
    a = 1.0 / (1.0 - alpha)
    log_vmt = (
        a * math.log(-alpha)
        + alpha * a * math.log(xi)
        + a * math.log1p(t_y * wage)
        - a * math.log(pi)
    )
    return math.exp(log_vmt)


@dataclass
class HouseholdRecord:
    """One surveyed household.

    Derived per-household quantities (fuel price per mile, imputed wage,
    work share of driving time and hours per mile) are cached on the record
    once computed, so that records read back from the canonical household
    table do not need their vehicles and trips.
    """

    id: str
    annual_vmt: float
    annual_drive_time: float
    gas_price: float
    income_group: Optional[int]
    sample_weight: float
    cluster_id: str
    controls: dict = field(default_factory=dict)
    vehicles: list = field(default_factory=list)
    trips: list = field(default_factory=list)
    fuel_cost: Optional[float] = None
    wage: Optional[float] = None
    work_time_share: Optional[float] = None
    hours_per_mile: Optional[float] = None

    def time_cost(self, scenario: TtcScenario = TTC_SCENARIOS["base"]) -> float:
        if self.wage is None or self.work_time_share is None or self.hours_per_mile is None:
            raise NoTravel(f"household {self.id}: time cost inputs not computed")
        return scenario.hourly_share(self.work_time_share) * self.wage * self.hours_per_mile

    def hourly_time_cost(self, scenario: TtcScenario = TTC_SCENARIOS["base"]) -> float:
        if self.wage is None or self.work_time_share is None:
            raise NoTravel(f"household {self.id}: time cost inputs not computed")
        return scenario.hourly_share(self.work_time_share) * self.wage

    def cost_bundle(self, scenario: TtcScenario = TTC_SCENARIOS["base"]) -> CostBundle:
        p_f = self.fuel_cost
        if p_f is None:
            p_f = fuel_price_per_mile(self.vehicles, self.gas_price)
        return combined_price(p_f, self.time_cost(scenario))
