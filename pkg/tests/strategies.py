"""Hypothesis strategies for random polytopes and regions inside a bounded window."""
from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from racv.geometry import Polytope, Region

WINDOW = 10.0


@st.composite
def polytopes(draw, dim: int) -> Polytope:
    window = Polytope.box([0.0] * dim, [WINDOW] * dim)
    n = draw(st.integers(0, 3))
    rows, rhs = [], []
    for _ in range(n):
        a = draw(st.lists(st.integers(-3, 3), min_size=dim, max_size=dim))
        if not any(a):
            continue
        rows.append(a)
        rhs.append(draw(st.integers(-5, 25)))
    if not rows:
        lo = draw(st.lists(st.integers(0, 8), min_size=dim, max_size=dim))
        hi = [x + draw(st.integers(0, 4)) for x in lo]
        return Polytope.box(lo, hi)
    return window.with_constraints(np.array(rows, dtype=float), np.array(rhs, dtype=float))


@st.composite
def regions(draw, dim: int | None = None) -> Region:
    if dim is None:
        dim = draw(st.sampled_from([1, 2]))
    parts = draw(st.lists(polytopes(dim), min_size=0, max_size=3))
    return Region.of(*parts) if parts else Region.empty(dim)


@st.composite
def region_pairs(draw) -> tuple[Region, Region]:
    dim = draw(st.sampled_from([1, 2]))
    return draw(regions(dim)), draw(regions(dim))


@st.composite
def region_triples(draw) -> tuple[Region, Region, Region]:
    dim = draw(st.sampled_from([1, 2]))
    return draw(regions(dim)), draw(regions(dim)), draw(regions(dim))
