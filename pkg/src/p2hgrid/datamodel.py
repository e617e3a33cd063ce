"""Scenario schema, validation and YAML/CSV ingestion."""

from __future__ import annotations

import csv
import dataclasses
import math
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

DEFAULT_ANGLE_LIMIT_RAD = 0.5
BUNDLED_SCENARIOS = ("toy6", "ireland35")


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or fails validation."""


@dataclass(frozen=True)
class Bus:
    id: int
    peak_demand_mw: float = 0.0
    angle_min_rad: float = -DEFAULT_ANGLE_LIMIT_RAD
    angle_max_rad: float = DEFAULT_ANGLE_LIMIT_RAD
    has_p2h: bool = False


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    susceptance_pu: float
    limit_mw: float
    name: str = ""


@dataclass(frozen=True)
class Generator:
    id: str
    bus: int
    a_eur_per_mw2h: float
    b_eur_per_mwh: float
    c_eur_per_h: float
    pmin_mw: float
    pmax_mw: float
    ramp_up_mw_per_h: float
    ramp_down_mw_per_h: float
    emission_t_per_mwh: float | None = None
    technology: str = ""

    # short aliases used by the cost arithmetic
    @property
    def a(self) -> float:
        return self.a_eur_per_mw2h

    @property
    def b(self) -> float:
        return self.b_eur_per_mwh

    @property
    def c(self) -> float:
        return self.c_eur_per_h

    @property
    def pmin(self) -> float:
        return self.pmin_mw

    @property
    def pmax(self) -> float:
        return self.pmax_mw


@dataclass(frozen=True)
class WindFarm:
    bus: int
    capacity_mw: float
    name: str = ""


@dataclass(frozen=True)
class Profiles:
    """Per-step series. ``days`` partitions the 0-based step indices into days."""

    step_hours: tuple[float, ...]
    demand_factor: tuple[float, ...]
    wind_availability: tuple[float, ...]
    import_mw: tuple[float, ...]
    export_mw: tuple[float, ...]
    days: tuple[tuple[int, ...], ...]

    @property
    def horizon(self) -> int:
        return len(self.demand_factor)

    @property
    def n_days(self) -> int:
        return len(self.days)

    @property
    def total_hours(self) -> float:
        return float(sum(self.step_hours))


@dataclass(frozen=True)
class Economics:
    emission_cost_eur_per_mwh: float
    shed_cost_eur_per_mwh: float
    curtailment_cost_eur_per_mwh: float
    p2h_capital_eur_per_mw: float
    p2h_amortization_per_day: float
    snsp_limit: float
    h2_demand_mwh_per_day: float
    default_emission_t_per_mwh: float = 0.0

    @property
    def p2h_cost_eur_per_mw_day(self) -> float:
        """Investment charge per MW of plant for one day of operation."""
        return self.p2h_capital_eur_per_mw * self.p2h_amortization_per_day


@dataclass(frozen=True)
class StorageSettings:
    initial_soc_mwh: float = 0.0
    soc_max_mwh: float | None = None
    cyclic: bool = False
    charge_efficiency: float = 1.0


@dataclass(frozen=True)
class Scenario:
    name: str
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    wind: tuple[WindFarm, ...]
    profiles: Profiles
    economics: Economics
    reference_bus: int
    base_mva: float = 100.0
    storage: StorageSettings = StorageSettings()
    interconnector_bus: int | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    @property
    def p2h_buses(self) -> list[int]:
        return [b.id for b in self.buses if b.has_p2h]

    @property
    def wind_buses(self) -> list[int]:
        return [w.bus for w in self.wind]

    def emission_rate(self, gen: Generator) -> float:
        if gen.emission_t_per_mwh is None:
            return self.economics.default_emission_t_per_mwh
        return gen.emission_t_per_mwh

    def truncate(self, steps: int) -> "Scenario":
        """Keep only the first ``steps`` time steps; days are clipped to match."""
        p = self.profiles
        if not 1 <= steps <= p.horizon:
            raise ScenarioError(f"cannot truncate horizon {p.horizon} to {steps} steps")
        days = tuple(
            tuple(t for t in day if t < steps) for day in p.days if any(t < steps for t in day)
        )
        prof = Profiles(
            step_hours=p.step_hours[:steps],
            demand_factor=p.demand_factor[:steps],
            wind_availability=p.wind_availability[:steps],
            import_mw=p.import_mw[:steps],
            export_mw=p.export_mw[:steps],
            days=days,
        )
        return dataclasses.replace(self, profiles=prof)

    def with_economics(self, **changes: Any) -> "Scenario":
        return dataclasses.replace(self, economics=dataclasses.replace(self.economics, **changes))

    def with_p2h_buses(self, buses) -> "Scenario":
        chosen = set(buses)
        new = tuple(dataclasses.replace(b, has_p2h=b.id in chosen) for b in self.buses)
        return dataclasses.replace(self, buses=new)


def peak_demand_total(s: Scenario) -> float:
    return float(sum(b.peak_demand_mw for b in s.buses))


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def validate(s: Scenario) -> list[str]:
    """Return one message per violated invariant (empty when the scenario is valid)."""
    out: list[str] = []
    ids = [b.id for b in s.buses]
    seen: set[int] = set()
    for bid in ids:
        if bid in seen:
            out.append(f"bus {bid}: duplicate id")
        seen.add(bid)
    known = set(ids)

    for b in s.buses:
        if not b.angle_min_rad <= b.angle_max_rad:
            out.append(f"bus {b.id}: angle_min_rad > angle_max_rad")
        if not (_finite(b.peak_demand_mw) and b.peak_demand_mw >= 0):
            out.append(f"bus {b.id}: peak demand must be >= 0")

    if s.reference_bus not in known:
        out.append(f"reference bus {s.reference_bus}: unknown bus")

    for i, ln in enumerate(s.lines, start=1):
        tag = ln.name or f"line {i}"
        for end in (ln.from_bus, ln.to_bus):
            if end not in known:
                out.append(f"{tag}: unknown bus {end}")
        if ln.from_bus == ln.to_bus:
            out.append(f"{tag}: from_bus equals to_bus")
        if not (_finite(ln.limit_mw) and ln.limit_mw > 0):
            out.append(f"{tag}: thermal limit must be > 0")
        if not _finite(ln.susceptance_pu) or ln.susceptance_pu == 0:
            out.append(f"{tag}: susceptance must be non-zero")

    gen_ids: set[str] = set()
    for g in s.generators:
        if g.id in gen_ids:
            out.append(f"generator {g.id}: duplicate id")
        gen_ids.add(g.id)
        if g.bus not in known:
            out.append(f"generator {g.id}: unknown bus {g.bus}")
        if not 0 <= g.pmin_mw <= g.pmax_mw:
            out.append(f"generator {g.id}: requires 0 <= pmin <= pmax")
        if g.a_eur_per_mw2h < 0:
            out.append(f"generator {g.id}: quadratic coefficient a < 0 (non-convex cost)")
        if not (g.ramp_up_mw_per_h > 0 and g.ramp_down_mw_per_h > 0):
            out.append(f"generator {g.id}: ramp limits must be > 0")
        if g.emission_t_per_mwh is not None and g.emission_t_per_mwh < 0:
            out.append(f"generator {g.id}: emission rate must be >= 0")

    wind_buses: set[int] = set()
    for w in s.wind:
        tag = w.name or f"wind at bus {w.bus}"
        if w.bus not in known:
            out.append(f"{tag}: unknown bus {w.bus}")
        if w.bus in wind_buses:
            out.append(f"{tag}: more than one wind farm on bus {w.bus}")
        wind_buses.add(w.bus)
        if not w.capacity_mw > 0:
            out.append(f"{tag}: installed capacity must be > 0")

    out.extend(_validate_profiles(s.profiles))

    e = s.economics
    for name in (
        "emission_cost_eur_per_mwh",
        "shed_cost_eur_per_mwh",
        "curtailment_cost_eur_per_mwh",
        "p2h_capital_eur_per_mw",
        "p2h_amortization_per_day",
        "h2_demand_mwh_per_day",
        "default_emission_t_per_mwh",
    ):
        if not getattr(e, name) >= 0:
            out.append(f"economics: {name} must be >= 0")
    if not 0 < e.snsp_limit <= 1:
        out.append("economics: snsp_limit must lie in (0, 1]")

    st = s.storage
    if st.initial_soc_mwh < 0:
        out.append("storage: initial_soc_mwh must be >= 0")
    if st.soc_max_mwh is not None and st.soc_max_mwh < st.initial_soc_mwh:
        out.append("storage: soc_max_mwh below initial_soc_mwh")
    if not 0 < st.charge_efficiency <= 1:
        out.append("storage: charge_efficiency must lie in (0, 1]")
    if s.interconnector_bus is not None and s.interconnector_bus not in known:
        out.append(f"interconnector bus {s.interconnector_bus}: unknown bus")
    if s.base_mva <= 0:
        out.append("base_mva must be > 0")

    if s.reference_bus in known:
        out.extend(_connectivity(s))
    return out


def _validate_profiles(p: Profiles) -> list[str]:
    out: list[str] = []
    T = len(p.demand_factor)
    if T == 0:
        return ["profiles: empty horizon"]
    for name in ("step_hours", "wind_availability", "import_mw", "export_mw"):
        if len(getattr(p, name)) != T:
            out.append(f"profiles: {name} has length {len(getattr(p, name))}, expected {T}")
    if any(not h > 0 for h in p.step_hours):
        out.append("profiles: step durations must be > 0")
    if any(not d >= 0 for d in p.demand_factor):
        out.append("profiles: demand factors must be >= 0")
    if any(not 0 <= w <= 1 for w in p.wind_availability):
        out.append("profiles: wind availability must lie in [0, 1]")
    if any(not x >= 0 for x in (*p.import_mw, *p.export_mw)):
        out.append("profiles: import/export must be >= 0")
    covered = sorted(t for day in p.days for t in day)
    if covered != list(range(T)):
        out.append("profiles: day partition must cover every step exactly once")
    return out


def _connectivity(s: Scenario) -> list[str]:
    adj: dict[int, set[int]] = {b.id: set() for b in s.buses}
    for ln in s.lines:
        if ln.from_bus in adj and ln.to_bus in adj:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
    seen = {s.reference_bus}
    queue = deque([s.reference_bus])
    while queue:
        for nxt in adj[queue.popleft()]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return [f"bus {b}: unreachable from reference" for b in adj if b not in seen]


# ---------------------------------------------------------------- file I/O


def bundled_scenario_path(name: str) -> Path:
    ref = resources.files("p2hgrid") / "data" / "scenarios" / f"{name}.yaml"
    return Path(str(ref))


def resolve_scenario_path(name_or_path: str | Path) -> Path:
    """Accept either a file path or the name of a bundled scenario."""
    p = Path(name_or_path)
    if p.exists():
        return p
    if str(name_or_path) in BUNDLED_SCENARIOS:
        return bundled_scenario_path(str(name_or_path))
    raise ScenarioError(f"scenario {name_or_path!r}: no such file or bundled scenario")


def _require(d: dict, key: str, ctx: str) -> Any:
    if key not in d:
        raise ScenarioError(f"{ctx}: missing field '{key}'")
    return d[key]


def _build(cls, d: dict, ctx: str, renames: dict | None = None):
    if not isinstance(d, dict):
        raise ScenarioError(f"{ctx}: expected a mapping, got {type(d).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in d.items():
        key = (renames or {}).get(key, key)
        if key not in names:
            raise ScenarioError(f"{ctx}: unknown field '{key}'")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ScenarioError(f"{ctx}: {exc}") from exc


def _read_profile_csv(path: Path) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            for key, value in row.items():
                try:
                    cols.setdefault(key, []).append(float(value))
                except (TypeError, ValueError) as exc:
                    raise ScenarioError(f"{path.name} line {lineno}, column '{key}': {exc}") from exc
    return cols


def _parse_profiles(d: dict, base_dir: Path) -> Profiles:
    if not isinstance(d, dict):
        raise ScenarioError("profiles: expected a mapping")
    series: dict[str, list[float]] = {}
    if "file" in d:
        series.update(_read_profile_csv(base_dir / d["file"]))
    for key in ("demand_factor", "wind_availability", "import_mw", "export_mw", "step_hours"):
        if key in d:
            series[key] = [float(v) for v in d[key]]
    for key in ("demand_factor", "wind_availability"):
        if key not in series:
            raise ScenarioError(f"profiles: missing series '{key}'")
    T = len(series["demand_factor"])
    step_hours = series.get("step_hours", [float(d.get("step_duration_h", 1.0))] * T)
    imp = series.get("import_mw", [0.0] * T)
    exp = series.get("export_mw", [0.0] * T)
    if "days" in d:
        days = tuple(tuple(int(t) for t in day) for day in d["days"])
    else:
        per_day = int(d.get("steps_per_day", 24))
        if per_day <= 0:
            raise ScenarioError("profiles: steps_per_day must be positive")
        days = tuple(tuple(range(s, min(s + per_day, T))) for s in range(0, T, per_day))
    return Profiles(
        step_hours=tuple(float(x) for x in step_hours),
        demand_factor=tuple(series["demand_factor"]),
        wind_availability=tuple(series["wind_availability"]),
        import_mw=tuple(float(x) for x in imp),
        export_mw=tuple(float(x) for x in exp),
        days=days,
    )


def scenario_from_dict(doc: dict, base_dir: Path | str = ".", name: str = "scenario") -> Scenario:
    base_dir = Path(base_dir)
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    for section in ("buses", "lines", "generators", "profiles", "economics"):
        _require(doc, section, "scenario")
    buses = tuple(_build(Bus, b, f"buses[{i}]") for i, b in enumerate(doc["buses"]))
    lines = tuple(_build(Line, ln, f"lines[{i}]") for i, ln in enumerate(doc["lines"]))
    gens = tuple(_build(Generator, g, f"generators[{i}]") for i, g in enumerate(doc["generators"]))
    wind = tuple(_build(WindFarm, w, f"wind[{i}]") for i, w in enumerate(doc.get("wind") or []))
    econ = _build(Economics, doc["economics"], "economics")
    storage = _build(StorageSettings, doc.get("storage") or {}, "storage")
    profiles = _parse_profiles(doc["profiles"], base_dir)
    ref = doc.get("reference_bus", buses[0].id if buses else 0)
    return Scenario(
        name=str(doc.get("name", name)),
        buses=buses,
        lines=lines,
        generators=gens,
        wind=wind,
        profiles=profiles,
        economics=econ,
        reference_bus=int(ref),
        base_mva=float(doc.get("base_mva", 100.0)),
        storage=storage,
        interconnector_bus=doc.get("interconnector_bus"),
        provenance=dict(doc.get("provenance") or {}),
    )


def load_scenario(path: str | Path, horizon: int | None = None) -> Scenario:
    """Parse and fully validate a scenario file (or bundled scenario name).

    ``horizon`` truncates the profiles to the first ``horizon`` steps.
    """
    path = resolve_scenario_path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}:{where} {exc}") from exc
    s = scenario_from_dict(doc, base_dir=path.parent, name=path.stem)
    problems = validate(s)
    if problems:
        raise ScenarioError(f"{path}: invalid scenario: " + "; ".join(problems))
    if horizon is not None:
        s = s.truncate(horizon)
    return s


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical document form; profiles are always written inline."""
    p = s.profiles
    doc = {
        "name": s.name,
        "base_mva": s.base_mva,
        "reference_bus": s.reference_bus,
        "interconnector_bus": s.interconnector_bus,
        "buses": [dataclasses.asdict(b) for b in s.buses],
        "lines": [dataclasses.asdict(ln) for ln in s.lines],
        "generators": [dataclasses.asdict(g) for g in s.generators],
        "wind": [dataclasses.asdict(w) for w in s.wind],
        "profiles": {
            "step_hours": list(p.step_hours),
            "demand_factor": list(p.demand_factor),
            "wind_availability": list(p.wind_availability),
            "import_mw": list(p.import_mw),
            "export_mw": list(p.export_mw),
            "days": [list(day) for day in p.days],
        },
        "economics": dataclasses.asdict(s.economics),
        "storage": dataclasses.asdict(s.storage),
    }
    if s.provenance:
        doc["provenance"] = dict(s.provenance)
    return doc


def save_scenario(s: Scenario, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scenario_to_dict(s), fh, sort_keys=False, default_flow_style=None)
