"""Flight-route fuel, CO2 and hydrogen-demand arithmetic.

Units are fixed: masses in kg (CO2 in tonnes), energies in MWh, prices in
EUR/kg for fuels and EUR/MWh for the equivalent hydrogen benchmark.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from typing import Literal

ConversionMode = Literal["paper", "truncated", "exact"]

#: Rounded energy-density ratio between liquid hydrogen and jet fuel.
ROUNDED_FHV_RATIO = 2.8
FHV_JET_MJ_PER_KG = 43.1
FHV_H2_MJ_PER_KG = 120.0
ELECTROLYSIS_KWH_PER_KG = 55.0
DAYS_PER_YEAR = 365


@dataclass(frozen=True)
class RouteSpec:
    flights_per_day: float
    fuel_burn_per_journey_kg: float
    seats_per_aircraft: float
    co2_per_pax_leg_kg: float
    fhv_jet_mj_per_kg: float = FHV_JET_MJ_PER_KG
    fhv_h2_mj_per_kg: float = FHV_H2_MJ_PER_KG
    electrolysis_kwh_per_kg: float = ELECTROLYSIS_KWH_PER_KG

    def __post_init__(self) -> None:
        # zero flights is allowed: it is the trivial "route closed" case
        if self.flights_per_day < 0 or not math.isfinite(self.flights_per_day):
            raise ValueError(f"flights_per_day must be >= 0, got {self.flights_per_day}")
        for name in (
            "fuel_burn_per_journey_kg",
            "seats_per_aircraft",
            "co2_per_pax_leg_kg",
            "fhv_jet_mj_per_kg",
            "fhv_h2_mj_per_kg",
            "electrolysis_kwh_per_kg",
        ):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if self.fhv_h2_mj_per_kg <= self.fhv_jet_mj_per_kg:
            raise ValueError("hydrogen heating value must exceed the jet-fuel heating value")


@dataclass(frozen=True)
class FuelPlan:
    daily_jet_fuel_kg: float
    daily_co2_t: float
    daily_h2_kg: float
    daily_h2_mwh: float
    mode: ConversionMode = "paper"


@dataclass(frozen=True)
class FuelPriceInputs:
    jet_fuel_eur_per_kg: float
    carbon_offset_eur_per_kg: float = 0.0

    def __post_init__(self) -> None:
        if self.jet_fuel_eur_per_kg < 0 or self.carbon_offset_eur_per_kg < 0:
            raise ValueError("fuel and carbon-offset prices must be non-negative")


@dataclass(frozen=True)
class RouteRecord:
    """One row of the bundled busiest-routes table."""

    rank: int
    route: str
    passengers_million: float
    distance_km: float
    flights_per_year: float
    co2_per_pax_leg_kg: float
    time_min: float
    avg_seats_per_aircraft: float
    fuel_per_journey_kg: float
    otp_pct: float
    flights_per_day_stated: float | None = None

    @property
    def flights_per_day(self) -> float:
        if self.flights_per_day_stated is not None:
            return self.flights_per_day_stated
        return self.flights_per_year / DAYS_PER_YEAR

    def to_route_spec(self, **overrides: float) -> RouteSpec:
        fields = dict(
            flights_per_day=self.flights_per_day,
            fuel_burn_per_journey_kg=self.fuel_per_journey_kg,
            seats_per_aircraft=self.avg_seats_per_aircraft,
            co2_per_pax_leg_kg=self.co2_per_pax_leg_kg,
        )
        fields.update(overrides)
        return RouteSpec(**fields)


def daily_fuel_burn(route: RouteSpec) -> float:
    """Jet fuel burnt per day on the route, kg/day."""
    return route.flights_per_day * route.fuel_burn_per_journey_kg


def daily_co2(route: RouteSpec) -> float:
    """Passenger CO2 emitted per day on the route, tonnes/day."""
    return route.co2_per_pax_leg_kg * route.seats_per_aircraft * route.flights_per_day / 1000.0


def h2_mass_ratio(route: RouteSpec, mode: ConversionMode = "paper") -> float:
    """kg of hydrogen replacing one kg of jet fuel."""
    if mode in ("paper", "truncated"):
        return 1.0 / ROUNDED_FHV_RATIO
    if mode == "exact":
        return route.fhv_jet_mj_per_kg / route.fhv_h2_mj_per_kg
    raise ValueError(f"unknown conversion mode {mode!r}")


def hydrogen_equivalent(route: RouteSpec, mode: ConversionMode = "paper") -> FuelPlan:
    """Daily hydrogen mass and electrolysis energy that replace the route's jet fuel.

    ``mode="paper"`` uses the rounded 2.8 heating-value ratio; ``mode="exact"``
    uses the ratio of the route's two heating values. ``mode="truncated"``
    is the 2.8 ratio with the mass truncated to whole kg and the energy to
    0.1 MWh (2353.1 MWh/day for DUB-LHR).
    """
    jet = daily_fuel_burn(route)
    h2_kg = jet * h2_mass_ratio(route, mode)
    h2_mwh = h2_kg * route.electrolysis_kwh_per_kg / 1000.0
    if mode == "truncated":
        h2_kg = math.floor(h2_kg)
        h2_mwh = math.floor(h2_kg * route.electrolysis_kwh_per_kg / 100.0) / 10.0
    return FuelPlan(
        daily_jet_fuel_kg=jet,
        daily_co2_t=daily_co2(route),
        daily_h2_kg=h2_kg,
        daily_h2_mwh=h2_mwh,
        mode=mode,
    )


def equivalent_jet_fuel_price(plan: FuelPlan, prices: FuelPriceInputs) -> float:
    """Jet-fuel spend (fuel plus carbon offset) per MWh of replacement hydrogen, EUR/MWh."""
    if not plan.daily_h2_mwh > 0:
        raise ZeroDivisionError("equivalent fuel price undefined for zero hydrogen demand")
    total = prices.jet_fuel_eur_per_kg + prices.carbon_offset_eur_per_kg
    return plan.daily_jet_fuel_kg * total / plan.daily_h2_mwh


def load_routes(path=None) -> dict[str, RouteRecord]:
    """Read the route table, keyed by route code (``"DUB-LHR"`` style)."""
    if path is None:
        ref = resources.files("p2hgrid") / "data" / "routes.csv"
        text = ref.read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    routes: dict[str, RouteRecord] = {}
    reader = csv.DictReader(text.splitlines())
    for lineno, row in enumerate(reader, start=2):
        try:
            stated = (row.get("flights_per_day_stated") or "").strip()
            rec = RouteRecord(
                rank=int(row["rank"]),
                route=row["route"].strip().upper().replace("–", "-"),
                passengers_million=float(row["passengers_million"]),
                distance_km=float(row["distance_km"]),
                flights_per_year=float(row["flights_per_year"]),
                co2_per_pax_leg_kg=float(row["co2_per_pax_leg_kg"]),
                time_min=float(row["time_min"]),
                avg_seats_per_aircraft=float(row["avg_seats_per_aircraft"]),
                fuel_per_journey_kg=float(row["fuel_per_journey_kg"]),
                otp_pct=float(row["otp_pct"]),
                flights_per_day_stated=float(stated) if stated else None,
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"route table line {lineno}: {exc}") from exc
        routes[rec.route] = rec
    return routes


def route_spec(code: str, **overrides: float) -> RouteSpec:
    routes = load_routes()
    key = code.strip().upper().replace("–", "-")
    if key not in routes:
        raise KeyError(f"unknown route {code!r}; known: {', '.join(sorted(routes))}")
    return routes[key].to_route_spec(**overrides)
