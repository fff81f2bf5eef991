from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racv.geometry import Polytope, Region
from racv.probability import DistributionSpec, density, exact_mass_1d, full_space_check, integrate, sample

U5 = DistributionSpec("uniform", (Fraction(0), Fraction(5)))
U10 = DistributionSpec("uniform", (Fraction(0), Fraction(10)))
N32 = DistributionSpec("normal", (Fraction(3), Fraction(2)))
EXP1 = DistributionSpec("exponential", (Fraction(1),))


def iv(*pairs):
    return Region.intervals(pairs)


def test_exact_uniform_masses():
    assert integrate(iv((0, 0.5)), [U5]).value == pytest.approx(0.1)
    assert integrate(iv((0, 1), (2, 3)), [U5]).value == pytest.approx(0.4)
    assert integrate(iv((4, None)), [U5]).method == "exact"


def test_folded_normal_mass():
    # P(|X| <= 4) for X ~ N(3, 2)
    assert integrate(iv((0, 4)), [N32]).value == pytest.approx(0.69123, abs=1e-4)
    assert N32.cdf(float("inf")) == 1.0
    assert N32.pdf(-1.0) == 0.0


def test_overlapping_parts_are_not_double_counted():
    assert exact_mass_1d(iv((0, 3), (2, 4)), U10) == pytest.approx(0.4)


def test_null_parts_have_no_mass():
    point = Region.of(Polytope.box([2.0], [2.0]))
    assert integrate(point, [U5]).value == 0.0


@pytest.mark.parametrize("distrs", [[U5, U10], [N32, EXP1], [U5, N32, EXP1]])
def test_full_space_integrates_to_one(distrs):
    r = full_space_check(distrs, n=100_000, seed=1)
    assert r.method == "monte_carlo"
    assert abs(r.value - 1.0) <= max(4 * r.stat_error, 1e-12)


def test_half_plane_by_symmetry():
    below = Region.of(Polytope.make([[1.0, -1.0]], [0.0], 2))
    r = integrate(below, [U10, U10], samples=200_000, seed=5)
    assert abs(r.value - 0.5) <= 4 * r.stat_error


def test_same_seed_same_result_across_worker_counts(monkeypatch):
    region = Region.of(Polytope.box([0.0, 1.0], [3.0, 4.0]))
    monkeypatch.setenv("RACV_THREADS", "1")
    serial = integrate(region, [U10, N32], samples=200_000, seed=42)
    monkeypatch.setenv("RACV_THREADS", "4")
    parallel = integrate(region, [U10, N32], samples=200_000, seed=42)
    assert serial == parallel
    assert integrate(region, [U10, N32], samples=200_000, seed=43) != serial


def test_samples_are_reproducible():
    a = sample([U5, EXP1], seed=7, n=70_000)
    assert a.shape == (70_000, 2)
    assert np.array_equal(a, sample([U5, EXP1], seed=7, n=70_000))
    assert (a >= 0).all()


def test_density_is_product():
    assert density([U5, U10], [1.0, 1.0]) == pytest.approx(0.02)
    assert density([U5, U10], [6.0, 1.0]) == 0.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        integrate(Region.orthant(2), [U5])


@pytest.mark.parametrize("kind, params", [("uniform", (2, 1)), ("normal", (0, 0)), ("exponential", (-1,)),
                                          ("gamma", (1,))])
def test_bad_distributions(kind, params):
    with pytest.raises(ValueError):
        DistributionSpec(kind, tuple(Fraction(p) for p in params))


@settings(max_examples=40)
@given(st.integers(0, 8), st.integers(1, 4), st.integers(0, 2))
def test_monotone_in_region(lo, width, shrink):
    big = Region.of(Polytope.box([float(lo), 0.0], [float(lo + width), 5.0]))
    small = Region.of(Polytope.box([float(lo), 0.0], [float(lo + width), 5.0 - shrink]))
    a = integrate(small, [U10, U10], samples=20_000, seed=0)
    b = integrate(big, [U10, U10], samples=20_000, seed=0)
    assert a.value <= b.value + 4 * (a.stat_error + b.stat_error)
