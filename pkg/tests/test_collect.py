import pytest

from corpus import CASES, model
from racv.collect import CollectionError, Mode, check_subset, collect
from racv.geometry import Region
from racv.model import QuerySpec
from racv.reach import build_reach_tree
from racv.transform import initial_transform, modified_tree


def iv(*pairs):
    return Region.intervals(pairs)


def regions(name, goal, t_max, j_max):
    t = modified_tree(build_reach_tree(model(name), QuerySpec(frozenset({goal}), t_max, j_max)))
    return collect(t, {goal}, Mode.MIN), collect(t, {goal}, Mode.MAX)


@pytest.mark.parametrize("goal, k_min, k_max", [
    ("l1", [(0, 1)], [(0, 4)]),
    ("l2", [(4, None)], [(1, None)]),
    ("l3", [], [(0.5, 2)]),
    ("l4", [], [(1, None)]),
    ("l5", [], [(1, None)]),
])
def test_running_example_regions(goal, k_min, k_max):
    lo, hi = regions("running_example", goal, 5, 2)
    assert lo.equal_up_to_null(iv(*k_min))
    assert hi.equal_up_to_null(iv(*k_max))


def test_staying_forever_dodges_l2_in_rb():
    lo, hi = regions("r_b_uniform", "l2", 10, 2)
    assert lo.is_null()
    assert not hi.is_null()


def test_unfinished_tree_is_rejected():
    t = initial_transform(build_reach_tree(model("running_example"), QuerySpec(frozenset({"l1"}), 5, 2)))
    with pytest.raises(CollectionError):
        collect(t, {"l1"}, "min")


def test_mode_strings():
    assert Mode("min") is Mode.MIN
    with pytest.raises(ValueError):
        Mode("avg")


@pytest.mark.parametrize("name, goal", [(c.model, g) for c in CASES for g in c.goals])
def test_min_region_inside_max_region(name, goal):
    case = next(c for c in CASES if c.model == name)
    lo, hi = regions(name, goal, case.t_max, case.j_max)
    assert check_subset(lo, hi)
