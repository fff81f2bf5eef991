"""Bounded flowpipe construction and the reach tree.

State sets live in the model's variable space (user variables, then ``t``).
The time successor is computed exactly: primed copies of all variables are
introduced, elapsed time is read off the ``t`` coordinate, and the unprimed
coordinates are eliminated.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .geometry import Polytope
from .model import Jump, Location, QuerySpec, RacModel, VariableSpace, rectangle_polytope

DEFAULT_NODE_CAP = 5000


class ReachError(RuntimeError):
    """Raised when reachability cannot be completed (empty root, node cap)."""


class _ByContent:
    """Hashes a polytope by its constraint arrays."""

    __slots__ = ("p", "key")

    def __init__(self, p: Polytope):
        self.p = p
        self.key = (p.dim, p.A.shape, p.A.tobytes(), p.b.tobytes())

    def __hash__(self) -> int:
        return hash(self.key)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _ByContent) and self.key == other.key


def time_successor(model: RacModel, location: Location, v: Polytope, t_max: float) -> Polytope:
    """States reachable from ``v`` by letting time pass in ``location`` up to ``t_max``."""
    if v.trivially_empty:
        return Polytope.empty(model.variables.d)
    # sibling queries on one model revisit identical sets
    return _flowpipe(model.variables, location, _ByContent(v), float(t_max))


@lru_cache(maxsize=4096)
def _flowpipe(space: VariableSpace, location: Location, v_key: _ByContent, t_max: float) -> Polytope:
    v = v_key.p
    d = space.d
    t = space.time_index
    if v.is_empty():
        return Polytope.empty(d)
    rows: list[np.ndarray] = []
    rhs: list[float] = []

    def add(coeffs: dict[int, float], bound: float) -> None:
        row = np.zeros(2 * d)
        for k, c in coeffs.items():
            row[k] += c
        rows.append(row)
        rhs.append(bound)

    # columns 0..d-1 hold the source valuation, d..2d-1 the successor
    dt = {d + t: 1.0, t: -1.0}
    add({d + t: -1.0, t: 1.0}, 0.0)
    for i, rate in enumerate(location.flow):
        if i == t:
            continue
        lo, hi = rate.floats()
        if np.isfinite(lo):
            # lo * dt <= x'_i - x_i
            c = {k: lo * s for k, s in dt.items()}
            c[d + i] = c.get(d + i, 0.0) - 1.0
            c[i] = c.get(i, 0.0) + 1.0
            add(c, 0.0)
        if np.isfinite(hi):
            c = {k: -hi * s for k, s in dt.items()}
            c[d + i] = c.get(d + i, 0.0) + 1.0
            c[i] = c.get(i, 0.0) - 1.0
            add(c, 0.0)
    add({d + t: 1.0}, float(t_max))
    lifted = Polytope.make(np.array(rows), np.array(rhs), 2 * d)
    lifted = lifted.intersect(v.embed(2 * d, range(d)))
    lifted = lifted.intersect(rectangle_polytope(location.invariant).embed(2 * d, range(d, 2 * d)))
    return lifted.eliminate(range(d))


def jump_successor(model: RacModel, jump: Jump, v: Polytope) -> Polytope:
    """States right after taking ``jump`` from ``v`` (before any time passes)."""
    d = model.variables.d
    w = v.intersect(rectangle_polytope(jump.guard))
    if w.is_empty():
        return Polytope.empty(d)
    reset_dims = [i for i, r in enumerate(jump.reset) if r is not None]
    if reset_dims:
        w = w.cylindrify(reset_dims)
        lo = [None] * d
        hi = [None] * d
        for i in reset_dims:
            lo[i], hi[i] = jump.reset[i].floats()
        w = w.intersect(Polytope.box(lo, hi))
    w = w.intersect(rectangle_polytope(model.location(jump.target).invariant))
    return w if not w.is_empty() else Polytope.empty(d)


@dataclass
class ReachNode:
    id: int
    location: str
    states: Polytope
    depth: int
    expired: frozenset[str] = frozenset()
    parent: int | None = None
    jump: Jump | None = None


@dataclass
class ReachTree:
    model: RacModel
    query: QuerySpec
    nodes: dict[int, ReachNode] = field(default_factory=dict)
    edges: list[tuple[int, Jump, int]] = field(default_factory=list)
    root: int = 0

    def children(self, i: int) -> list[int]:
        return [c for p, _, c in self.edges if p == i]

    def parent(self, i: int) -> int | None:
        return self.nodes[i].parent

    def __len__(self) -> int:
        return len(self.nodes)

    def paths(self) -> Iterator[tuple[str, ...]]:
        """Root-to-leaf jump-name sequences."""
        kids: dict[int, list[tuple[Jump, int]]] = {}
        for p, j, c in self.edges:
            kids.setdefault(p, []).append((j, c))

        def walk(i: int, prefix: tuple[str, ...]) -> Iterator[tuple[str, ...]]:
            if i not in kids:
                yield prefix
                return
            for j, c in kids[i]:
                yield from walk(c, prefix + (j.name,))

        yield from walk(self.root, ())


def initial_states(model: RacModel, t_max: float) -> Polytope:
    loc = model.location(model.initial_location)
    init = rectangle_polytope(loc.init).intersect(rectangle_polytope(loc.invariant))
    return time_successor(model, loc, init, t_max)


def build_reach_tree(model: RacModel, query: QuerySpec, node_cap: int = DEFAULT_NODE_CAP) -> ReachTree:
    tree = ReachTree(model, query)
    root_states = initial_states(model, query.time_bound)
    if root_states.is_empty():
        raise ReachError(f"initial set of {model.initial_location} is empty")
    tree.nodes[0] = ReachNode(0, model.initial_location, root_states, 0)
    queue = deque([0])
    next_id = 1
    while queue:
        node = tree.nodes[queue.popleft()]
        if node.location in query.goal_locations or node.depth >= query.jump_bound:
            continue
        for jump in model.outgoing(node.location):
            after = jump_successor(model, jump, node.states)
            if after.is_empty():
                continue
            target = model.location(jump.target)
            states = time_successor(model, target, after, query.time_bound)
            if states.is_empty():
                continue
            if next_id >= node_cap:
                raise ReachError(f"reach tree exceeds the node cap of {node_cap}")
            expired = node.expired | {jump.event} if jump.stochastic else node.expired
            tree.nodes[next_id] = ReachNode(next_id, jump.target, states, node.depth + 1,
                                            frozenset(expired), node.id, jump)
            tree.edges.append((node.id, jump, next_id))
            queue.append(next_id)
            next_id += 1
    return tree


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(tree: ReachTree) -> str:
    lines = ["digraph reach {", "  node [shape=box];"]
    for i in sorted(tree.nodes):
        n = tree.nodes[i]
        lines.append(f'  n{i} [label="{_dot_escape(f"{i}: {n.location}")}"];')
    for p, j, c in tree.edges:
        label = j.name if j.event is None else f"{j.name} ({j.event})"
        lines.append(f'  n{p} -> n{c} [label="{_dot_escape(label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
