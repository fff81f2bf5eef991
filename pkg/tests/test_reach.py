import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import model
from racv.geometry import Polytope
from racv.model import QuerySpec, parse_model, rectangle_polytope
from racv.reach import ReachError, build_reach_tree, initial_states, jump_successor, time_successor, to_dot


def contained(p: Polytope, q: Polytope, tol: float = 1e-7) -> bool:
    """Exact inclusion test, valid for lower-dimensional sets too."""
    if p.is_empty():
        return True
    return all(p.maximize(a) <= b + tol for a, b in zip(q.A, q.b))


def same_set(p: Polytope, q: Polytope) -> bool:
    return contained(p, q) and contained(q, p)


def test_root_flowpipe_of_running_example():
    m = model("running_example")
    states = initial_states(m, 5.0)
    # x between r and 2r, x <= 4, r = t
    expected = Polytope.make(
        [[-1, 1, 0], [1, -2, 0], [1, 0, 0], [0, 1, -1], [0, -1, 1], [0, 0, 1], [0, 0, -1]],
        [0, 0, 4, 0, 0, 5, 0], 3)
    assert same_set(states, expected)
    shadow = states.project([0, 1])
    assert shadow.contains([4.0, 2.0]) and shadow.contains([4.0, 4.0]) and not shadow.contains([4.0, 1.9])


def test_guard_intersection_of_running_example():
    m = model("running_example")
    e_b = next(j for j in m.jumps if j.name == "e_b")
    after = jump_successor(m, e_b, initial_states(m, 5.0))
    assert not after.is_empty()
    assert after.bounds(0) == pytest.approx((2.0, 4.0))
    assert after.bounds(1) == pytest.approx((1.0, 4.0))


def test_running_example_tree_has_six_nodes():
    m = model("running_example")
    tree = build_reach_tree(m, QuerySpec(frozenset({"l5"}), 5, 2))
    assert len(tree) == 6
    assert [n.location for n in tree.nodes.values()] == ["l0", "l1", "l2", "l3", "l4", "l5"]
    assert sorted(tree.paths()) == [("e_a", "e_c"), ("e_b", "e_d"), ("e_b", "e_e")]
    assert tree.nodes[1].expired == frozenset({"r"})
    assert tree.nodes[2].expired == frozenset()


def test_goal_nodes_are_leaves():
    m = model("running_example")
    tree = build_reach_tree(m, QuerySpec(frozenset({"l2"}), 5, 2))
    assert len(tree) == 4
    assert tree.children(2) == []


def test_zero_jump_bound_gives_single_node():
    tree = build_reach_tree(model("running_example"), QuerySpec(frozenset({"l1"}), 5, 0))
    assert len(tree) == 1
    assert "n0" in to_dot(tree) and "->" not in to_dot(tree)


def test_node_cap_is_enforced():
    with pytest.raises(ReachError, match="node cap"):
        build_reach_tree(model("running_example"), QuerySpec(frozenset({"l5"}), 5, 2), node_cap=3)


def test_dot_is_deterministic():
    m = model("running_example")
    q = QuerySpec(frozenset({"l5"}), 5, 2)
    assert to_dot(build_reach_tree(m, q)) == to_dot(build_reach_tree(m, q))
    assert 'n0 -> n1 [label="e_a (r)"]' in to_dot(build_reach_tree(m, q))


# -- time successor properties --------------------------------------------------


def bound():
    return st.one_of(st.none(), st.integers(-3, 6))


@st.composite
def rectangular_locations(draw):
    """A two-variable location, an initial box inside its invariant, and a time bound."""
    flows, invs, init = {}, {}, {}
    for name in ("x", "y"):
        lo = draw(st.integers(-2, 2))
        flows[name] = [lo, lo + draw(st.integers(0, 2))]
        a = draw(st.integers(0, 2))
        b = a + draw(st.integers(0, 1))
        init[name] = [a, b]
        lo_inv, hi_inv = draw(bound()), draw(bound())
        lo_inv = None if lo_inv is None else min(lo_inv, a)
        hi_inv = None if hi_inv is None else max(hi_inv, b)
        invs[name] = [lo_inv, hi_inv]
    doc = {
        "variables": [{"name": "x"}, {"name": "y"}],
        "locations": [{"name": "l", "flow": flows, "invariant": invs, "init": init}],
        "jumps": [],
    }
    return parse_model(json.dumps(doc)), float(draw(st.integers(1, 4)))


@settings(max_examples=200)
@given(rectangular_locations())
def test_time_successor_contains_source_and_is_idempotent(case):
    m, t_max = case
    loc = m.location("l")
    v = rectangle_polytope(loc.init).intersect(rectangle_polytope(loc.invariant))
    post = time_successor(m, loc, v, t_max)
    assert contained(v, post)
    assert contained(post, rectangle_polytope(loc.invariant))
    again = time_successor(m, loc, post, t_max)
    assert same_set(again, post)


@settings(max_examples=50)
@given(rectangular_locations())
def test_time_successor_contains_sampled_runs(case):
    m, t_max = case
    loc = m.location("l")
    v = rectangle_polytope(loc.init).intersect(rectangle_polytope(loc.invariant))
    post = time_successor(m, loc, v, t_max)
    inv = rectangle_polytope(loc.invariant)
    rng = np.random.default_rng(1)
    flow = [iv.floats() for iv in loc.flow]
    init = [iv.floats() for iv in loc.init]
    for _ in range(50):
        start = np.array([rng.uniform(lo, hi) for lo, hi in init])
        rate = np.array([rng.uniform(lo, hi) for lo, hi in flow])
        end = start + rng.uniform(0.0, t_max) * rate
        # invariants are convex, so both endpoints inside means the whole run is
        if inv.contains(start) and inv.contains(end):
            assert post.contains(end, 1e-7)
