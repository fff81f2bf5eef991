"""Modified reach trees and the rewrites that remove mixed branchings.

Nodes are keyed by ``(id_R, id_T)``: the reach-tree node they copy and a copy
index.  Edges carry a prophecy region and are either jumps or stutter (tau)
edges.  ``fully_modify`` classifies every node in key order, exposes the choice
to stay where a run can remain until the time bound, and resolves mixed
branchings by separating competing random events and splitting prophecy sets.
"""
from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .geometry import Polytope, Region
from .model import Jump, RacModel
from .prophecy import Branch, BranchClass, ChildEdge, classify, enabling_region, stay_region
from .reach import ReachTree

Key = tuple[int, int]

DEFAULT_NODE_CAP = 200_000
DEFAULT_SPLIT_CAP = 12

# node kinds
NODE, STAY, LAYER, SEP = "node", "stay", "layer", "sep"
# edge kinds
JUMP, STAY_EDGE, SPLIT_EDGE, SEP_EDGE = "jump", "stay", "split", "separate"


class TransformError(RuntimeError):
    pass


@dataclass
class ModNode:
    key: Key
    location: str
    states: Polytope
    expired: frozenset[str]
    kind: str = NODE

    @property
    def id_r(self) -> int:
        return self.key[0]


@dataclass
class ModEdge:
    parent: Key
    jump: Jump | None  # None for tau
    region: Region
    child: Key
    kind: str = JUMP

    @property
    def label(self) -> str:
        return "tau" if self.jump is None else self.jump.name

    @property
    def stochastic(self) -> bool:
        return self.jump is not None and self.jump.stochastic


@dataclass(frozen=True)
class RewriteRecord:
    """One applied rewrite: the children's regions before, the new edge regions after."""

    kind: str
    key: Key
    before: tuple[Region, ...]
    after: tuple[Region, ...]
    members: tuple[tuple[int, ...], ...] = ()  # split only: indices into ``before`` per cell


@dataclass
class ModifiedReachTree:
    origin: ReachTree
    nodes: dict[Key, ModNode] = field(default_factory=dict)
    out: dict[Key, list[ModEdge]] = field(default_factory=dict)
    into: dict[Key, ModEdge] = field(default_factory=dict)
    root: Key = (0, 0)
    classes: dict[Key, BranchClass] = field(default_factory=dict)
    _next_copy: Counter = field(default_factory=Counter)
    log: list["RewriteRecord"] = field(default_factory=list)

    @property
    def model(self) -> RacModel:
        return self.origin.model

    @property
    def d_random(self) -> int:
        return self.model.variables.d_random

    def __len__(self) -> int:
        return len(self.nodes)

    # -- structure -------------------------------------------------------

    def fresh_key(self, id_r: int) -> Key:
        self._next_copy[id_r] += 1
        return (id_r, self._next_copy[id_r])

    def add_node(self, node: ModNode) -> None:
        if node.key in self.nodes:
            raise TransformError(f"duplicate node key {node.key}")
        self.nodes[node.key] = node
        self.out[node.key] = []
        self._next_copy[node.id_r] = max(self._next_copy[node.id_r], node.key[1])

    def add_edge(self, edge: ModEdge) -> None:
        self.out[edge.parent].append(edge)
        self.into[edge.child] = edge

    def remove_subtree(self, key: Key) -> None:
        for e in self.out.pop(key):
            self.remove_subtree(e.child)
        del self.nodes[key]
        edge = self.into.pop(key, None)
        if edge is not None and edge.parent in self.out:
            self.out[edge.parent] = [e for e in self.out[edge.parent] if e.child != key]

    def incoming(self, key: Key) -> Region:
        edge = self.into.get(key)
        return Region.orthant(self.d_random) if edge is None else edge.region

    def positive_edges(self, key: Key) -> list[ModEdge]:
        return [e for e in self.out[key] if not e.region.is_null()]

    def has_stay(self, key: Key) -> bool:
        return any(e.kind == STAY_EDGE for e in self.out[key])

    def depth(self, key: Key) -> int:
        n = 0
        while key in self.into:
            key = self.into[key].parent
            n += 1
        return n

    def walk(self) -> Iterator[ModNode]:
        stack = [self.root]
        while stack:
            key = stack.pop()
            yield self.nodes[key]
            stack.extend(e.child for e in reversed(self.out[key]))


def initial_transform(tree: ReachTree) -> ModifiedReachTree:
    """One copy of every reach-tree node, edges annotated with enabling regions."""
    model = tree.model
    t = ModifiedReachTree(tree)
    for i in sorted(tree.nodes):
        n = tree.nodes[i]
        t.add_node(ModNode((i, 0), n.location, n.states, n.expired))
    for p, jump, c in tree.edges:
        parent = tree.nodes[p]
        region = enabling_region(model, parent.states, jump, parent.expired, t.incoming((p, 0)))
        t.add_edge(ModEdge((p, 0), jump, region, (c, 0)))
    return t


def edge_regions(t: ModifiedReachTree) -> dict[tuple[Key, Key], Region]:
    return {(e.parent, e.child): e.region for edges in t.out.values() for e in edges}


def branching(t: ModifiedReachTree, key: Key) -> BranchClass | None:
    edges = t.out[key]
    if not any(not e.region.is_null() for e in edges):
        return None
    return classify(t.incoming(key), [ChildEdge(e.region, e.stochastic) for e in edges])


# -- rewrites ------------------------------------------------------------


def expose(t: ModifiedReachTree, key: Key) -> Key | None:
    """Add an absorbing stay child when a run can remain in ``key`` until the time bound.

    Returns the key of the new node, or ``None`` when no state reaches the bound.
    """
    node = t.nodes[key]
    region = stay_region(t.model, node.states, node.expired, t.origin.query.time_bound, t.incoming(key))
    if region is None:
        return None
    stay_key = t.fresh_key(node.id_r)
    t.add_node(ModNode(stay_key, node.location, node.states, node.expired, STAY))
    t.add_edge(ModEdge(key, None, region, stay_key, STAY_EDGE))
    t.log.append(RewriteRecord("expose", key, (), (region,)))
    return stay_key


def valid_copy(t: ModifiedReachTree, source: Key, restriction: Region, parent: Key,
               edge: ModEdge) -> Key:
    """Copy the subtree below ``source`` under ``parent``, restricting every region.

    ``edge`` is the template for the connecting edge; its region is intersected
    with ``restriction`` too.  Null regions are kept.
    """
    orig = t.nodes[source]
    key = t.fresh_key(orig.id_r)
    t.add_node(ModNode(key, orig.location, orig.states, orig.expired, orig.kind))
    t.add_edge(ModEdge(parent, edge.jump, edge.region.intersect(restriction), key, edge.kind))
    for child_edge in list(t.out[source]):
        valid_copy(t, child_edge.child, restriction, key, child_edge)
    return key


def subtree_size(t: ModifiedReachTree, key: Key) -> int:
    return 1 + sum(subtree_size(t, e.child) for e in t.out[key])


@dataclass(frozen=True)
class Cell:
    members: tuple[int, ...]  # indices into the positive edges
    region: Region


def split_cells(regions: list[Region], cap: int = DEFAULT_SPLIT_CAP) -> list[Cell]:
    """Non-null sets of prophecies on which exactly the members' regions hold."""
    n = len(regions)
    if n > cap:
        raise TransformError(f"split over {n} children exceeds the cap of {cap}")
    cells: list[Cell] = []
    dead: list[frozenset[int]] = []
    for size in range(1, n + 1):
        for members in itertools.combinations(range(n), size):
            ms = frozenset(members)
            if any(d <= ms for d in dead):
                continue
            common = regions[members[0]]
            for k in members[1:]:
                common = common.intersect(regions[k])
            if common.is_null():
                dead.append(ms)
                continue
            cell = common
            for k in range(n):
                if k not in ms:
                    cell = cell.difference(regions[k])
                    if cell.is_null():
                        break
            cell = cell.drop_null()
            if not cell.is_null():
                cells.append(Cell(members, cell))
    return cells


def split(t: ModifiedReachTree, key: Key, cap: int = DEFAULT_SPLIT_CAP) -> list[Key]:
    """Replace the positive children of ``key`` by one layer node per prophecy cell."""
    pos = t.positive_edges(key)
    cells = split_cells([e.region for e in pos], cap)
    node = t.nodes[key]
    layers = []
    for cell in cells:
        layer = t.fresh_key(node.id_r)
        t.add_node(ModNode(layer, node.location, node.states, node.expired, LAYER))
        t.add_edge(ModEdge(key, None, cell.region, layer, SPLIT_EDGE))
        for k in cell.members:
            valid_copy(t, pos[k].child, cell.region, layer, pos[k])
        layers.append(layer)
    for e in pos:
        t.remove_subtree(e.child)
    t.log.append(RewriteRecord("split", key, tuple(e.region for e in pos), tuple(c.region for c in cells),
                               tuple(c.members for c in cells)))
    return layers


def competing_events(t: ModifiedReachTree, key: Key) -> list[str]:
    seen: list[str] = []
    for e in t.positive_edges(key):
        if e.stochastic and e.jump.event not in seen:
            seen.append(e.jump.event)
    return seen


def winner_polytope(t: ModifiedReachTree, winner: str, events: list[str]) -> Polytope:
    """``{p : p(winner) <= p(r') for every other competing r'}``."""
    names = t.model.variables.random_names
    w = names.index(winner)
    rows, rhs = [], []
    for other in events:
        if other == winner:
            continue
        row = np.zeros(len(names))
        row[w], row[names.index(other)] = 1.0, -1.0
        rows.append(row)
        rhs.append(0.0)
    return Polytope.make(np.array(rows).reshape(-1, len(names)), np.array(rhs), len(names))


def separate(t: ModifiedReachTree, key: Key) -> list[Key]:
    """One layer node per competing random event, each fixing that event as the first to occur."""
    events = competing_events(t, key)
    if len(events) < 2:
        raise TransformError("separation needs at least two competing random events")
    pos = t.positive_edges(key)
    node = t.nodes[key]
    incoming = t.incoming(key)
    layers = []
    for r in events:
        order = Region.of(winner_polytope(t, r, events))
        layer = t.fresh_key(node.id_r)
        t.add_node(ModNode(layer, node.location, node.states, node.expired, SEP))
        t.add_edge(ModEdge(key, None, incoming.intersect(order), layer, SEP_EDGE))
        for e in pos:
            valid_copy(t, e.child, order, layer, e)
        layers.append(layer)
    for e in pos:
        t.remove_subtree(e.child)
    t.log.append(RewriteRecord("separate", key, tuple(e.region for e in pos),
                               tuple(t.out[key][-len(events) + k].region for k in range(len(events)))))
    return layers


# -- driver --------------------------------------------------------------


def fully_modify(t: ModifiedReachTree, node_cap: int = DEFAULT_NODE_CAP, separation: bool = True,
                 split_cap: int = DEFAULT_SPLIT_CAP,
                 observer: Callable[[ModifiedReachTree, RewriteRecord], None] | None = None) -> ModifiedReachTree:
    """Rewrite ``t`` in place until no branching is mixed and every stay choice is exposed.

    ``observer`` is called after every rewrite.
    """

    def notify() -> None:
        if observer is not None:
            observer(t, t.log[-1])

    goals = t.origin.query.goal_locations
    heap = list(t.nodes)
    heapq.heapify(heap)
    while heap:
        key = heapq.heappop(heap)
        if key not in t.nodes:
            continue
        node = t.nodes[key]
        if node.kind == STAY or node.location in goals:
            continue
        cls = branching(t, key)
        if cls is None:
            continue
        if node.kind == LAYER:
            # every child of a layer node is enabled on the whole cell
            t.classes[key] = BranchClass(Branch.NONDETERMINISTIC)
            continue
        if (cls.tag is not Branch.STOCHASTIC and node.kind == NODE and not t.has_stay(key)):
            stay = expose(t, key)
            if stay is not None:
                notify()
                cls = branching(t, key)
        if cls.tag is Branch.MIXED:
            if separation and len(competing_events(t, key)) >= 2:
                new = separate(t, key)
            else:
                new = split(t, key, split_cap)
            notify()
            # the new layer edges carry disjoint cells
            cls = BranchClass(Branch.STOCHASTIC)
            for k in new:
                for n in _subtree_keys(t, k):
                    heapq.heappush(heap, n)
            if len(t.nodes) > node_cap:
                raise TransformError(f"modified reach tree exceeds the node cap of {node_cap}")
        t.classes[key] = cls
    return t


def _subtree_keys(t: ModifiedReachTree, key: Key) -> Iterator[Key]:
    yield key
    for e in t.out[key]:
        yield from _subtree_keys(t, e.child)


def modified_tree(tree: ReachTree, node_cap: int = DEFAULT_NODE_CAP, separation: bool = True) -> ModifiedReachTree:
    return fully_modify(initial_transform(tree), node_cap, separation)


# -- paths and export ----------------------------------------------------


def project_paths(t: ModifiedReachTree) -> Counter:
    """Multiset of root-to-leaf jump-name sequences with tau edges removed."""
    out: Counter = Counter()

    def walk(key: Key, prefix: tuple[str, ...]) -> None:
        edges = t.out[key]
        if not edges:
            out[prefix] += 1
            return
        for e in edges:
            walk(e.child, prefix if e.jump is None else prefix + (e.jump.name,))

    walk(t.root, ())
    return out


def path_maintaining(t: ModifiedReachTree) -> bool:
    """Every projected path is a path of the origin tree and every origin path survives."""
    origin = set(t.origin.paths())
    prefixes = {p[:k] for p in origin for k in range(len(p) + 1)}
    projected = set(project_paths(t))
    return projected <= prefixes and origin <= projected


def _region_label(region: Region, names) -> str:
    desc = region.describe(names)
    if region.dim == 1:
        if not desc:
            return "{}"
        parts = []
        for lo, hi in desc:
            parts.append(f"[{'-inf' if lo is None else f'{lo:g}'}, {'inf' if hi is None else f'{hi:g}'}]")
        return " u ".join(parts)
    if not desc:
        return "{}"
    return " u ".join("(" + ", ".join(c) + ")" if c else "(all)" for c in desc)


def to_dot(t: ModifiedReachTree) -> str:
    names = t.model.variables.random_names
    lines = ["digraph modified {", "  node [shape=box];"]
    ids = {key: k for k, key in enumerate(sorted(t.nodes))}
    for key in sorted(t.nodes):
        n = t.nodes[key]
        style = "" if n.kind == NODE else ', style="rounded"'
        label = f"({key[0]},{key[1]}): {n.location}".replace('"', '\\"')
        lines.append(f'  n{ids[key]} [label="{label}"{style}];')
    for key in sorted(t.nodes):
        for e in t.out[key]:
            label = f"{_region_label(e.region, names)}, {e.label}".replace('"', '\\"')
            dash = ", style=dashed" if e.jump is None else ""
            lines.append(f'  n{ids[e.parent]} -> n{ids[e.child]} [label="{label}"{dash}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
