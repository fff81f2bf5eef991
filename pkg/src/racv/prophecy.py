"""Enabling-prophecy regions and branching classification.

Prophecy space has one coordinate per random clock, in variable order.  A
clock that has already expired on the path, or that expires at the edge
itself, pins its prophecy to the observed clock value.  Every other clock only
bounds its prophecy from below, so those coordinates are up-closed.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .geometry import Polytope, Region
from .model import Jump, RacModel, rectangle_polytope


class ClassificationError(RuntimeError):
    pass


class Branch(Enum):
    STOCHASTIC = "stochastic"
    NONDETERMINISTIC = "nondeterministic"
    MIXED = "mixed"


@dataclass(frozen=True)
class BranchClass:
    tag: Branch
    case: str | None = None  # mixed only: "(i)(a)", "(i)(b)", "(i)(c)", "(ii)"

    def __post_init__(self) -> None:
        if (self.case is not None) != (self.tag is Branch.MIXED):
            raise ValueError("a sub-case is recorded exactly for mixed branchings")

    def __str__(self) -> str:
        return self.tag.value if self.case is None else f"{self.tag.value} {self.case}"


@dataclass(frozen=True)
class ChildEdge:
    """What classification needs to know about one outgoing edge."""

    region: Region
    stochastic: bool


def unexpired_dims(model: RacModel, expired: Iterable[str]) -> list[int]:
    expired = set(expired)
    return [k for k, name in enumerate(model.variables.random_names) if name not in expired]


def prophecy_projection(model: RacModel, states: Polytope, up_dims: Sequence[int]) -> Region:
    """Project ``states`` onto prophecy space and up-close the given prophecy coordinates."""
    space = model.variables
    if states.is_empty():
        return Region.empty(space.d_random)
    proj = states.project(list(space.random_indices))
    if proj.is_empty():
        return Region.empty(space.d_random)
    return Region.of(proj.up_closure(up_dims))


def enabling_region(model: RacModel, states: Polytope, jump: Jump, expired: Iterable[str],
                    incoming: Region | None = None) -> Region:
    """Prophecies under which some run represented by ``states`` can take ``jump``."""
    pinned = set(expired) | ({jump.event} if jump.stochastic else set())
    w = states.intersect(rectangle_polytope(jump.guard))
    region = prophecy_projection(model, w, unexpired_dims(model, pinned))
    if incoming is not None:
        region = region.intersect(incoming)
    return region


def stay_region(model: RacModel, states: Polytope, expired: Iterable[str], t_max: float,
                incoming: Region) -> Region | None:
    """Prophecies under which a run can remain in the node until ``t_max``.

    Returns ``None`` when no state of the node reaches ``t_max``.
    """
    at_bound = states.fix(model.variables.time_index, float(t_max))
    if at_bound.is_empty():
        return None
    return prophecy_projection(model, at_bound, unexpired_dims(model, expired)).intersect(incoming)


def positive(edges: Sequence[ChildEdge]) -> list[int]:
    """Indices of edges whose region is not a null set."""
    return [k for k, e in enumerate(edges) if not e.region.is_null()]


def classify(incoming: Region, edges: Sequence[ChildEdge]) -> BranchClass:
    pos = [edges[k] for k in positive(edges)]
    if not pos:
        raise ClassificationError("no child with positive probability")
    n = len(pos)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    overlap = [not pos[a].region.disjoint_up_to_null(pos[b].region) for a, b in pairs]
    if n >= 2 and not any(overlap):
        return BranchClass(Branch.STOCHASTIC)
    if n == 1 and pos[0].stochastic:
        return BranchClass(Branch.STOCHASTIC)
    equal_parent = [e.region.equal_up_to_null(incoming) for e in pos]
    if all(not e.stochastic for e in pos) and all(equal_parent):
        return BranchClass(Branch.NONDETERMINISTIC)
    proper = [e.region.subset_up_to_null(incoming) and not eq for e, eq in zip(pos, equal_parent)]
    if any(overlap):
        if any(not pos[a].region.equal_up_to_null(pos[b].region) for a, b in pairs):
            return BranchClass(Branch.MIXED, "(i)(a)")
        if all(equal_parent) and any(e.stochastic for e in pos):
            return BranchClass(Branch.MIXED, "(i)(b)")
        if all(proper):
            return BranchClass(Branch.MIXED, "(i)(c)")
    if n == 1 and not pos[0].stochastic and proper[0]:
        return BranchClass(Branch.MIXED, "(ii)")
    raise ClassificationError("branching matches none of the three classes")
