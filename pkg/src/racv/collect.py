"""Enforcing (minimum) and allowing (maximum) prophecy regions of a fully modified tree."""
from __future__ import annotations

from enum import Enum
from typing import Iterable

from .geometry import Region
from .prophecy import Branch
from .transform import Key, ModifiedReachTree


class CollectionError(RuntimeError):
    pass


class Mode(Enum):
    MIN = "min"
    MAX = "max"


def collect(t: ModifiedReachTree, goals: Iterable[str], mode: Mode | str) -> Region:
    mode = Mode(mode)
    goals = frozenset(goals)
    dim = t.d_random

    def visit(key: Key) -> Region:
        node = t.nodes[key]
        pos = t.positive_edges(key)
        if not pos:
            return t.incoming(key) if node.location in goals else Region.empty(dim)
        parts = [visit(e.child) for e in pos]
        cls = t.classes.get(key)
        if cls is None:
            raise CollectionError(f"tree not fully modified: node {key} is unclassified")
        if cls.tag is Branch.MIXED:
            raise CollectionError(f"tree not fully modified: node {key} is {cls}")
        if mode is Mode.MAX or cls.tag is Branch.STOCHASTIC:
            out = Region.empty(dim)
            for r in parts:
                out = out.union(r)
            return out.drop_null()
        out = parts[0]
        for r in parts[1:]:
            out = out.intersect(r)
        return out.drop_null()

    return visit(t.root)


def check_subset(min_region: Region, max_region: Region) -> bool:
    return min_region.subset_up_to_null(max_region)
