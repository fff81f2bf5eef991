"""Brute-force reference on the operational semantics for a fixed prophecy.

Runs are searched in a normal form: one time step with a constant rate, then a
jump.  For rectangular flows a constant rate reaches every endpoint a
piecewise-constant rate can reach, and rectangular invariants are convex, so
checking the endpoint of the step suffices.  Durations are taken from a time
grid and from the exact instants at which a guard or invariant bound is hit, a
running clock reaches its prophesied value, or the time bound is reached.
Rates are the corners of the flow box plus interior samples.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import Interval, Jump, RacModel
from .probability import DistributionSpec, ProbabilityResult

EPS = 1e-9


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiscretizationSpec:
    time_steps_per_unit: int = 20
    rate_samples_per_dim: int = 3
    prophecy_grid_per_dim: int = 200
    state_cap: int = 200_000

    def __post_init__(self) -> None:
        for name in ("time_steps_per_unit", "rate_samples_per_dim", "prophecy_grid_per_dim", "state_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


@dataclass(frozen=True)
class SchedulerDecision:
    """A time step of ``duration`` at ``rate``, or a ``jump`` landing at ``point``."""

    duration: float | None = None
    rate: tuple[float, ...] | None = None
    jump: str | None = None
    point: tuple[float, ...] | None = None


def _samples(iv: Interval, k: int) -> list[float]:
    lo, hi = iv.floats()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise OracleError("unbounded flow or reset intervals are not supported by the oracle")
    if hi - lo <= EPS or k <= 1:
        return sorted({lo, hi})
    return sorted({lo + (hi - lo) * s / (k - 1) for s in range(k)} | {lo, hi})


@dataclass(frozen=True)
class _Loc:
    name: str
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    rates: tuple[tuple[float, ...], ...]
    clocks: tuple[tuple[str, int], ...]  # random clocks running here
    out: tuple["_Jump", ...]


@dataclass(frozen=True)
class _Jump:
    jump: Jump
    guard: tuple[tuple[int, float, float], ...]  # bounded guard dims only
    resets: tuple[tuple[int, tuple[float, ...]], ...]


def _box(rect: Sequence[Interval]) -> tuple[tuple[float, ...], tuple[float, ...]]:
    lo, hi = zip(*(iv.floats() for iv in rect))
    return tuple(lo), tuple(hi)


def _inside(lo: Sequence[float], hi: Sequence[float], v: Sequence[float]) -> bool:
    for a, b, x in zip(lo, hi, v):
        if x < a - EPS or x > b + EPS:
            return False
    return True


class _Search:
    def __init__(self, model: RacModel, goals: frozenset[str], t_max: float, j_max: int,
                 prophecy: Sequence[float], disc: DiscretizationSpec, compiled: dict[str, _Loc]):
        self.m = model
        self.goals = goals
        self.t_max = float(t_max)
        self.j_max = j_max
        self.disc = disc
        self.t = model.variables.time_index
        self.p = {name: float(v) for name, v in zip(model.variables.random_names, prophecy, strict=True)}
        self.locs = compiled
        self.step = 1.0 / disc.time_steps_per_unit
        self.memo: dict[tuple, bool] = {}
        self.visited = 0
        # successful states: the decisions taken there and the state they lead to
        self.choice: dict[tuple, tuple[list[SchedulerDecision], tuple | None]] = {}

    def max_duration(self, loc: _Loc, v: Sequence[float], rate: Sequence[float], expired: frozenset[str]) -> float:
        limit = self.t_max - v[self.t]
        for lo, hi, x, a in zip(loc.lo, loc.hi, v, rate):
            if a > EPS and hi < math.inf:
                limit = min(limit, (hi - x) / a)
            elif a < -EPS and lo > -math.inf:
                limit = min(limit, (lo - x) / a)
        for r, i in loc.clocks:
            if r not in expired:
                limit = min(limit, self.p[r] - v[i])
        return max(limit, 0.0)

    def durations(self, loc: _Loc, v: Sequence[float], rate: Sequence[float], limit: float) -> list[float]:
        out = {limit}
        out.update(k * self.step for k in range(1, int(limit / self.step) + 1))
        for j in loc.out:
            for i, lo, hi in j.guard:
                a = rate[i]
                if abs(a) > EPS:
                    if lo > -math.inf:
                        out.add((lo - v[i]) / a)
                    if hi < math.inf:
                        out.add((hi - v[i]) / a)
        for r, i in loc.clocks:
            out.add(self.p[r] - v[i])
        return sorted(d for d in out if EPS < d <= limit + EPS)

    def enabled(self, loc: _Loc, v: tuple[float, ...], expired: frozenset[str]) -> list[tuple[Jump, tuple[float, ...]]]:
        out = []
        for j in loc.out:
            jump = j.jump
            if jump.stochastic:
                r = jump.event
                if r in expired or abs(v[self.m.variables.index(r)] - self.p[r]) > 1e-7:
                    continue
            elif any(v[i] < lo - EPS or v[i] > hi + EPS for i, lo, hi in j.guard):
                continue
            target = self.locs[jump.target]
            dims = [i for i, _ in j.resets]
            for combo in itertools.product(*(vals for _, vals in j.resets)):
                w = list(v)
                for i, x in zip(dims, combo):
                    w[i] = x
                if _inside(target.lo, target.hi, w):
                    out.append((jump, tuple(w)))
        return out

    def solve(self, loc_name: str, v: tuple[float, ...], jumps: int, expired: frozenset[str],
              want_goal: bool) -> bool:
        """True iff some decision sequence reaches a goal (``want_goal``) or avoids all goals."""
        if loc_name in self.goals:
            return want_goal
        if jumps >= self.j_max:
            return not want_goal
        if v[self.t] >= self.t_max - EPS and not want_goal:
            return True
        key = self.key(loc_name, v, jumps, expired)
        if key in self.memo:
            return self.memo[key]
        self.visited += 1
        if self.visited > self.disc.state_cap:
            raise OracleError(f"oracle state space exceeds {self.disc.state_cap}")
        result = self._expand(key, self.locs[loc_name], v, jumps, expired, want_goal)
        self.memo[key] = result
        return result

    @staticmethod
    def key(loc_name: str, v: Sequence[float], jumps: int, expired: frozenset[str]) -> tuple:
        return (loc_name, tuple(round(x, 9) for x in v), jumps, expired)

    def _jump_from(self, key: tuple, loc: _Loc, v: tuple[float, ...], jumps: int, expired: frozenset[str],
                   want_goal: bool, prefix: list[SchedulerDecision]) -> tuple[bool, bool]:
        """(some jump succeeds, some jump is enabled)."""
        options = self.enabled(loc, v, expired)
        for jump, w in options:
            exp = expired | {jump.event} if jump.stochastic else expired
            if self.solve(jump.target, w, jumps + 1, exp, want_goal):
                self.choice[key] = (prefix + [SchedulerDecision(jump=jump.name, point=w)],
                                    self.key(jump.target, w, jumps + 1, exp))
                return True, True
        return False, bool(options)

    def _expand(self, key: tuple, loc: _Loc, v: tuple[float, ...], jumps: int, expired: frozenset[str],
                want_goal: bool) -> bool:
        ok, moved = self._jump_from(key, loc, v, jumps, expired, want_goal, [])
        if ok:
            return True
        frozen = {i for r, i in loc.clocks if r in expired}
        for rate in loc.rates:
            if frozen:
                rate = tuple(0.0 if i in frozen else a for i, a in enumerate(rate))
            limit = self.max_duration(loc, v, rate, expired)
            if limit <= EPS:
                continue
            moved = True
            for dt in self.durations(loc, v, rate, limit):
                w = tuple(x + dt * a for x, a in zip(v, rate))
                step = [SchedulerDecision(duration=dt, rate=tuple(rate))]
                if w[self.t] >= self.t_max - EPS and not want_goal:
                    self.choice[key] = (step, None)
                    return True
                if self._jump_from(key, loc, w, jumps, expired, want_goal, step)[0]:
                    return True
        # a run that can neither jump nor let time pass ends here without reaching a goal
        return not moved and not want_goal


def _compile(model: RacModel, disc: DiscretizationSpec) -> dict[str, _Loc]:
    space = model.variables
    out = {}
    for name, loc in model.locations.items():
        lo, hi = _box(loc.invariant)
        axes = [_samples(iv, disc.rate_samples_per_dim) for iv in loc.flow]
        clocks = tuple((space.names[i], i) for i in space.random_indices if loc.flow[i].lo == 1)
        jumps = []
        for jump in model.outgoing(name):
            guard = tuple((i, *iv.floats()) for i, iv in enumerate(jump.guard)
                          if iv.lo is not None or iv.hi is not None)
            resets = tuple((i, tuple(_samples(iv, 3))) for i, iv in enumerate(jump.reset) if iv is not None)
            jumps.append(_Jump(jump, guard, resets))
        out[name] = _Loc(name, lo, hi, tuple(itertools.product(*axes)), clocks, tuple(jumps))
    return out


def _initial_points(model: RacModel, disc: DiscretizationSpec) -> list[tuple[float, ...]]:
    loc = model.location(model.initial_location)
    axes = []
    for iv, inv in zip(loc.init, loc.invariant):
        box = iv.meet(inv)
        if box is None:
            return []
        axes.append(_samples(box, disc.rate_samples_per_dim))
    return list(itertools.product(*axes))


def _decide(model: RacModel, goals: Iterable[str], t_max: float, j_max: int, prophecy: Sequence[float],
            disc: DiscretizationSpec, want_goal: bool, compiled: dict[str, _Loc] | None = None) -> bool:
    goals = frozenset(goals)
    compiled = _compile(model, disc) if compiled is None else compiled
    search = _Search(model, goals, t_max, j_max, prophecy, disc, compiled)
    for v in _initial_points(model, disc):
        if search.solve(model.initial_location, v, 0, frozenset(), want_goal):
            return True
    return False


def witness(model: RacModel, goals: Iterable[str], t_max: float, j_max: int, prophecy: Sequence[float],
            want_goal: bool, disc: DiscretizationSpec = DiscretizationSpec()) -> list[SchedulerDecision] | None:
    """A decision sequence that reaches (``want_goal``) or avoids ``goals``, or ``None``."""
    search = _Search(model, frozenset(goals), t_max, j_max, prophecy, disc, _compile(model, disc))
    for v in _initial_points(model, disc):
        if search.solve(model.initial_location, v, 0, frozenset(), want_goal):
            out: list[SchedulerDecision] = []
            key = search.key(model.initial_location, v, 0, frozenset())
            while key in search.choice:
                steps, key = search.choice[key]
                out.extend(steps)
            return out
    return None


def can_avoid(model: RacModel, goals: Iterable[str], t_max: float, j_max: int, prophecy: Sequence[float],
              disc: DiscretizationSpec = DiscretizationSpec()) -> bool:
    """Whether some scheduler keeps every visited location outside ``goals``."""
    return _decide(model, goals, t_max, j_max, prophecy, disc, want_goal=False)


def can_reach(model: RacModel, goals: Iterable[str], t_max: float, j_max: int, prophecy: Sequence[float],
              disc: DiscretizationSpec = DiscretizationSpec()) -> bool:
    """Whether some scheduler visits a location in ``goals`` within the bounds."""
    return _decide(model, goals, t_max, j_max, prophecy, disc, want_goal=True)


def _cells(distr: DistributionSpec, t_max: float, n: int) -> list[tuple[float, float]]:
    """(representative point, exact mass) per cell, with one tail cell beyond the grid."""
    lo, hi = distr.support()
    upper = min(hi, t_max)
    edges = np.linspace(0.0, upper, n + 1)
    cells = [((a + b) / 2.0, distr.mass(a, b)) for a, b in zip(edges[:-1], edges[1:])]
    tail = 1.0 - distr.cdf(upper)
    if tail > 0.0:
        cells.append((upper + 1.0, tail))
    return cells


def oracle_probability(model: RacModel, goals: Iterable[str], t_max: float, j_max: int, mode: str,
                       disc: DiscretizationSpec = DiscretizationSpec(),
                       distrs: Sequence[DistributionSpec] | None = None) -> ProbabilityResult:
    """Grid quadrature of the pointwise decisions (min: cannot avoid, max: can reach)."""
    if mode not in ("min", "max"):
        raise ValueError(f"unknown mode {mode!r}")
    distrs = list(distrs) if distrs is not None else model.distribution_list()
    if len(distrs) > 2:
        raise OracleError("the oracle supports at most two random clocks")
    goals = frozenset(goals)
    per_dim = [_cells(d, t_max, disc.prophecy_grid_per_dim) for d in distrs]
    compiled = _compile(model, disc)
    total = 0.0
    for combo in itertools.product(*per_dim):
        weight = math.prod(m for _, m in combo)
        if weight <= 0.0:
            continue
        point = [x for x, _ in combo]
        if mode == "min":
            hit = not _decide(model, goals, t_max, j_max, point, disc, False, compiled)
        else:
            hit = _decide(model, goals, t_max, j_max, point, disc, True, compiled)
        if hit:
            total += weight
    return ProbabilityResult(min(1.0, total), 0.0, math.prod(len(c) for c in per_dim), "grid")
