"""Rectangular automata with random clocks: data model, model-file parser, validator.

A model file is a JSON document::

    {"variables": [{"name": "x", "random": false},
                   {"name": "r", "random": true,
                    "distribution": {"kind": "uniform", "params": [0, 5]}}],
     "locations": [{"name": "l0", "invariant": {"x": [null, 4]},
                    "flow": {"x": [1, 2]}, "init": {"x": [0, 0]}}],
     "jumps": [{"source": "l0", "target": "l1", "event": "r"}]}

The global clock ``t`` is added by the parser as the last variable.  Omitted
invariants and guards are unrestricted, omitted resets are the identity,
omitted flows are zero.  The flow of a random clock may be left out; it is then
derived from the stochastic jumps leaving the location.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .geometry import Polytope
from .probability import DistributionSpec

TIME = "t"


class ModelError(ValueError):
    """Raised for malformed model files."""


@dataclass(frozen=True)
class Interval:
    """Closed interval with rational endpoints; ``None`` is an infinite endpoint."""

    lo: Fraction | None = None
    hi: Fraction | None = None

    def __post_init__(self) -> None:
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ModelError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(v) -> "Interval":
        v = Fraction(v)
        return Interval(v, v)

    @property
    def unbounded(self) -> bool:
        return self.lo is None and self.hi is None

    def is_point(self, v=None) -> bool:
        if self.lo is None or self.lo != self.hi:
            return False
        return v is None or self.lo == Fraction(v)

    def contains_interval(self, other: "Interval") -> bool:
        lo_ok = self.lo is None or (other.lo is not None and other.lo >= self.lo)
        hi_ok = self.hi is None or (other.hi is not None and other.hi <= self.hi)
        return lo_ok and hi_ok

    def meet(self, other: "Interval") -> "Interval | None":
        lo = other.lo if self.lo is None else self.lo if other.lo is None else max(self.lo, other.lo)
        hi = other.hi if self.hi is None else self.hi if other.hi is None else min(self.hi, other.hi)
        if lo is not None and hi is not None and lo > hi:
            return None
        return Interval(lo, hi)

    def floats(self) -> tuple[float, float]:
        return (float("-inf") if self.lo is None else float(self.lo),
                float("inf") if self.hi is None else float(self.hi))

    def to_json(self) -> list:
        return [_num_json(self.lo), _num_json(self.hi)]


FULL = Interval()
ZERO = Interval.point(0)
ONE = Interval.point(1)


def _num_json(v: Fraction | None):
    if v is None:
        return None
    if v.denominator == 1:
        return int(v)
    return f"{v.numerator}/{v.denominator}"


def rectangle_polytope(rect: Sequence[Interval]) -> Polytope:
    lo, hi = zip(*(iv.floats() for iv in rect)) if rect else ((), ())
    return Polytope.box(list(lo), list(hi))


@dataclass(frozen=True)
class VariableSpace:
    names: tuple[str, ...]
    random_indices: tuple[int, ...]
    time_index: int

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ModelError("variable names must be unique")
        if self.time_index in self.random_indices:
            raise ModelError("the time variable cannot be a random clock")

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def d_random(self) -> int:
        return len(self.random_indices)

    @property
    def random_names(self) -> tuple[str, ...]:
        return tuple(self.names[i] for i in self.random_indices)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ModelError(f"unknown variable {name!r}") from None

    def is_random(self, i: int) -> bool:
        return i in self.random_indices


@dataclass(frozen=True)
class Location:
    name: str
    invariant: tuple[Interval, ...]
    flow: tuple[Interval, ...]
    init: tuple[Interval, ...] | None = None


@dataclass(frozen=True)
class Jump:
    name: str
    source: str
    target: str
    guard: tuple[Interval, ...]
    reset: tuple[Interval | None, ...]
    event: str | None = None

    @property
    def stochastic(self) -> bool:
        return self.event is not None


@dataclass(frozen=True)
class RacModel:
    variables: VariableSpace
    locations: Mapping[str, Location]
    jumps: tuple[Jump, ...]
    distributions: Mapping[str, DistributionSpec]
    initial_location: str

    def location(self, name: str) -> Location:
        return self.locations[name]

    def outgoing(self, name: str) -> list[Jump]:
        return [j for j in self.jumps if j.source == name]

    def distribution_list(self) -> list[DistributionSpec]:
        return [self.distributions[n] for n in self.variables.random_names]


@dataclass(frozen=True)
class QuerySpec:
    goal_locations: frozenset[str]
    time_bound: float
    jump_bound: int
    mode: str = "min"
    samples: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.goal_locations:
            raise ValueError("at least one goal location is required")
        if not self.time_bound > 0:
            raise ValueError("time bound must be positive")
        if self.jump_bound < 0:
            raise ValueError("jump bound must be nonnegative")
        if self.mode not in ("min", "max", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.samples < 1:
            raise ValueError("samples must be positive")


# -- parsing -------------------------------------------------------------


def _frac(v: Any, where: str) -> Fraction | None:
    if v is None:
        return None
    if isinstance(v, bool):
        raise ModelError(f"{where}: expected a number, got {v!r}")
    try:
        if isinstance(v, float):
            return Fraction(v).limit_denominator(10**9)
        return Fraction(v)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ModelError(f"{where}: expected a number, got {v!r}") from None


def _interval(v: Any, where: str) -> Interval:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ModelError(f"{where}: expected [lo, hi]")
    return Interval(_frac(v[0], where), _frac(v[1], where))


def _rect(spec: Any, space: VariableSpace, default: Interval, where: str) -> list[Interval]:
    out = [default] * space.d
    if spec is None:
        return out
    if not isinstance(spec, dict):
        raise ModelError(f"{where}: expected an object mapping variables to intervals")
    for name, iv in spec.items():
        if name not in space.names:
            raise ModelError(f"{where}: unknown variable {name!r}")
        out[space.index(name)] = _interval(iv, f"{where}.{name}")
    return out


def _distribution(spec: Any, where: str) -> DistributionSpec:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ModelError(f"{where}: random clock needs a distribution with a kind")
    params = tuple(_frac(p, where) for p in spec.get("params", []))
    try:
        return DistributionSpec(str(spec["kind"]), params)
    except ValueError as exc:
        raise ModelError(f"{where}: {exc}") from None


def parse_model(text: str) -> RacModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a JSON object")
    for key in ("variables", "locations", "jumps"):
        if key not in doc:
            raise ModelError(f"missing top-level key {key!r}")

    names: list[str] = []
    random_idx: list[int] = []
    distributions: dict[str, DistributionSpec] = {}
    for k, var in enumerate(doc["variables"]):
        where = f"variables[{k}]"
        if not isinstance(var, dict) or not isinstance(var.get("name"), str):
            raise ModelError(f"{where}: expected an object with a string name")
        name = var["name"]
        if name == TIME:
            raise ModelError(f"{where}: {TIME!r} is reserved for the global clock")
        if name in names:
            raise ModelError(f"{where}: duplicate variable {name!r}")
        names.append(name)
        if var.get("random", False):
            random_idx.append(len(names) - 1)
            distributions[name] = _distribution(var.get("distribution"), where)
        elif "distribution" in var:
            raise ModelError(f"{where}: only random clocks carry a distribution")
    names.append(TIME)
    space = VariableSpace(tuple(names), tuple(random_idx), len(names) - 1)
    t = space.time_index

    raw_locs = doc["locations"]
    loc_names = [l.get("name") if isinstance(l, dict) else None for l in raw_locs]
    seen: set[str] = set()
    for k, n in enumerate(loc_names):
        if not isinstance(n, str):
            raise ModelError(f"locations[{k}]: expected an object with a string name")
        if n in seen:
            raise ModelError(f"locations[{k}]: duplicate location {n!r}")
        seen.add(n)

    jumps: list[Jump] = []
    jump_names: set[str] = set()
    for k, raw in enumerate(doc["jumps"]):
        where = f"jumps[{k}]"
        if not isinstance(raw, dict):
            raise ModelError(f"{where}: expected an object")
        for end in ("source", "target"):
            if raw.get(end) not in seen:
                raise ModelError(f"{where}: unknown {end} location {raw.get(end)!r}")
        name = raw.get("name", f"e{k}")
        if name in jump_names:
            raise ModelError(f"{where}: duplicate jump name {name!r}")
        jump_names.add(name)
        event = raw.get("event")
        if event is not None:
            if event not in names or space.index(event) not in random_idx:
                raise ModelError(f"{where}: event {event!r} is not a random clock")
            if raw.get("guard"):
                raise ModelError(f"{where}: stochastic jumps must be nonguarded")
        guard = _rect(raw.get("guard"), space, FULL, f"{where}.guard")
        reset: list[Interval | None] = [None] * space.d
        for vname, iv in (raw.get("reset") or {}).items():
            if vname not in names:
                raise ModelError(f"{where}.reset: unknown variable {vname!r}")
            reset[space.index(vname)] = _interval(iv, f"{where}.reset.{vname}")
        jumps.append(Jump(name, raw["source"], raw["target"], tuple(guard), tuple(reset), event))

    locations: dict[str, Location] = {}
    initial: list[str] = []
    for k, raw in enumerate(raw_locs):
        where = f"locations[{k}]"
        inv = _rect(raw.get("invariant"), space, FULL, f"{where}.invariant")
        flow = _rect(raw.get("flow"), space, ZERO, f"{where}.flow")
        given = raw.get("flow") or {}
        flow[t] = ONE
        for i in random_idx:
            if space.names[i] not in given:
                runs = any(j.source == raw["name"] and j.event == space.names[i] for j in jumps)
                flow[i] = ONE if runs else ZERO
        init = None
        if "init" in raw and raw["init"] is not None:
            init = _rect(raw["init"], space, ZERO, f"{where}.init")
            for i in random_idx:
                init[i] = init[i] if space.names[i] in raw["init"] else ZERO
            init[t] = init[t] if TIME in raw["init"] else ZERO
            init = tuple(init)
            initial.append(raw["name"])
        locations[raw["name"]] = Location(raw["name"], tuple(inv), tuple(flow), init)

    if not initial:
        raise ModelError("no location has an initial set")
    if len(initial) > 1:
        raise ModelError(f"multiple initial locations are not supported: {', '.join(initial)}")
    return RacModel(space, locations, tuple(jumps), distributions, initial[0])


def load_model(path: str | Path) -> RacModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))


def dump_model(model: RacModel) -> str:
    """Serialize to the model-file format (normalized, explicit)."""
    space = model.variables
    user = [i for i in range(space.d) if i != space.time_index]

    def rect(r: Sequence[Interval], skip_default: Interval | None) -> dict:
        return {space.names[i]: r[i].to_json() for i in user if r[i] != skip_default}

    variables = []
    for i in user:
        entry: dict[str, Any] = {"name": space.names[i], "random": space.is_random(i)}
        if space.is_random(i):
            d = model.distributions[space.names[i]]
            entry["distribution"] = {"kind": d.kind, "params": [_num_json(p) for p in d.params]}
        variables.append(entry)
    locations = []
    for loc in model.locations.values():
        entry = {"name": loc.name, "invariant": rect(loc.invariant, FULL),
                 "flow": {space.names[i]: loc.flow[i].to_json() for i in user}}
        if loc.init is not None:
            entry["init"] = {space.names[i]: loc.init[i].to_json() for i in user}
        locations.append(entry)
    jumps = []
    for j in model.jumps:
        entry = {"name": j.name, "source": j.source, "target": j.target}
        guard = rect(j.guard, FULL)
        if guard:
            entry["guard"] = guard
        reset = {space.names[i]: j.reset[i].to_json() for i in user if j.reset[i] is not None}
        if reset:
            entry["reset"] = reset
        if j.event is not None:
            entry["event"] = j.event
        jumps.append(entry)
    return json.dumps({"variables": variables, "locations": locations, "jumps": jumps}, indent=2)


# -- validation ----------------------------------------------------------


@dataclass
class ValidationReport:
    findings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=lambda: ["nonblocking condition: not checked"])

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, msg: str) -> None:
        self.findings.append(msg)


def _event_repeats(model: RacModel) -> list[str]:
    """Random events that can label two jumps on one path of the location graph."""
    out: list[str] = []
    for name in model.variables.random_names:
        labelled = [j for j in model.jumps if j.event == name]
        # a repeat exists iff the target of some r-jump reaches the source of some r-jump
        for j in labelled:
            stack, seen = [j.target], {j.target}
            hit = False
            while stack and not hit:
                loc = stack.pop()
                for nxt in model.outgoing(loc):
                    if nxt.event == name:
                        hit = True
                        break
                    if nxt.target not in seen:
                        seen.add(nxt.target)
                        stack.append(nxt.target)
            if hit:
                out.append(name)
                break
    return out


def validate(model: RacModel) -> ValidationReport:
    report = ValidationReport()
    space = model.variables
    t = space.time_index
    for loc in model.locations.values():
        where = f"location {loc.name}"
        if loc.flow[t] != ONE:
            report.add(f"{where}: flow of {TIME} must be [1,1]")
        if not loc.invariant[t].unbounded:
            report.add(f"{where}: invariant of {TIME} must be unrestricted")
        if loc.init is not None:
            if loc.init[t] != ZERO:
                report.add(f"{where}: initial value of {TIME} must be 0")
            for i, iv in enumerate(loc.init):
                if loc.invariant[i].meet(iv) != iv:
                    report.add(f"{where}: initial set of {space.names[i]} not inside the invariant")
        for i in space.random_indices:
            r = space.names[i]
            if loc.init is not None and loc.init[i] != ZERO:
                report.add(f"{where}: random clock {r} must start at 0")
            if not loc.invariant[i].unbounded:
                report.add(f"{where}: invariant of random clock {r} must be unrestricted")
            runs = any(j.event == r for j in model.outgoing(loc.name))
            if loc.flow[i] != (ONE if runs else ZERO):
                report.add(f"{where}: random-clock flow inconsistent for {r}")
    for j in model.jumps:
        where = f"jump {j.name}"
        if j.stochastic and any(not g.unbounded for g in j.guard):
            report.add(f"{where}: stochastic jumps must be nonguarded")
        for i in list(space.random_indices) + [t]:
            if not j.guard[i].unbounded:
                report.add(f"{where}: guard on {space.names[i]} must be unrestricted")
            if j.reset[i] is not None:
                report.add(f"{where}: reset of {space.names[i]} must be the identity")
        src, dst = model.locations[j.source], model.locations[j.target]
        for i in range(space.d):
            if i == t or space.is_random(i):
                continue
            enabled = src.invariant[i].meet(j.guard[i])
            if enabled is None:
                report.add(f"{where}: guard on {space.names[i]} never satisfiable in {j.source}")
                continue
            landed = enabled if j.reset[i] is None else j.reset[i]
            if not dst.invariant[i].contains_interval(landed):
                report.add(f"{where}: {space.names[i]} may violate the invariant of {j.target}")
    for r in _event_repeats(model):
        report.add(f"random event occurs twice on a path: {r}")
    return report


def goal_set(model: RacModel, goals: Iterable[str]) -> frozenset[str]:
    goals = frozenset(goals)
    unknown = goals - set(model.locations)
    if unknown:
        raise ModelError(f"unknown goal location(s): {', '.join(sorted(unknown))}")
    return goals
