"""End-to-end acceptance checks, one PASS/FAIL line per criterion."""
import contextlib
import io
import json
import math
import time

import test_collect
import test_geometry
import test_probability
import test_prophecy
import test_reach
import test_transform
from corpus import CASES, MODELS, Case, model, small_cases
from racv import geometry, reach
from racv.cli import main, run_query
from racv.geometry import Region
from racv.oracle import oracle_probability
from racv.prophecy import Branch

REPORT: list[str] = []
EXACT = 1e-9


def report(n: int, failures: list[str], seconds: float, limit: float, summary: str) -> None:
    if seconds >= limit:
        failures = failures + [f"runtime {seconds:.2f} s exceeds {limit:g} s"]
    status = "FAIL" if failures else "PASS"
    detail = summary if not failures else "; ".join(failures)
    line = f"{status} criterion {n}: {detail} [{seconds:.2f} s]"
    REPORT.append(line)
    print(line)
    assert not failures, line


def cold() -> float:
    """Start a timer with the geometry caches emptied."""
    reach._flowpipe.cache_clear()
    geometry._chebyshev_lp.cache_clear()
    return time.perf_counter()


def case(name: str) -> Case:
    return next(c for c in CASES if c.model == name)


def values(name: str, goal: str, samples: int = 100_000, seed: int = 0):
    """(min result, max result, min region, max region) of one pipeline run."""
    lo, hi = run_query(model(name), case(name).query(goal, samples=samples, seed=seed))
    return lo.probability, hi.probability, lo.region, hi.region


def iv(*pairs):
    return Region.intervals(pairs)


def check_exact(failures, label, got, want, tol=EXACT):
    if abs(got - want) > tol:
        failures.append(f"{label} = {got:.6g}, expected {want:g}")


# -- 1 ------------------------------------------------------------------------------

RUNNING_TABLE = {
    # goal: (min, max, enforcing region, allowing region)
    "l1": (0.1, 0.8, iv((0, 0.5)), iv((0, 4))),
    "l2": (0.2, 0.8, iv((4, None)), iv((1, None))),
    "l3": (0.0, 0.3, Region.empty(1), iv((0.5, 2))),
    "l4": (0.0, 0.8, Region.empty(1), iv((1, None))),
    "l5": (0.0, 0.8, Region.empty(1), iv((1, None))),
}


def test_criterion_1_running_example():
    failures = []
    start = cold()
    for goal, (p_min, p_max, k_min, k_max) in RUNNING_TABLE.items():
        lo, hi, r_min, r_max = values("running_example", goal)
        check_exact(failures, f"min {goal}", lo.value, p_min)
        check_exact(failures, f"max {goal}", hi.value, p_max)
        if lo.method != "exact" or hi.method != "exact":
            failures.append(f"{goal} not on the exact path")
        if not r_min.equal_up_to_null(k_min):
            failures.append(f"min region {goal} = {r_min.describe()}, expected {k_min.describe()}")
        if not r_max.equal_up_to_null(k_max):
            failures.append(f"max region {goal} = {r_max.describe()}, expected {k_max.describe()}")
    report(1, failures, time.perf_counter() - start, 1.0, "running example, 10 values and regions")


# -- 2 and 3 --------------------------------------------------------------------------

UNIFORM_TABLE = [
    ("r_a_uniform", "l2", 0.6, 0.6),
    ("r_a_uniform", "l4", 0.0, 0.4),
    ("r_b_uniform", "l2", 0.0, 0.5),
    ("r_c_uniform", "l2", 0.6, 0.9),
    ("r_c_uniform", "l3", 0.1, 0.2),
    ("r_c_uniform", "l4", 0.0, 0.3),
]

NORMAL_TABLE = [
    ("r_a_normal", "l2", 0.30877, 0.30877),
    ("r_a_normal", "l4", 0.0, 0.69123),
    ("r_b_normal", "l2", 0.0, 0.84131),
    ("r_c_normal", "l2", 0.30877, 0.86407),
    ("r_c_normal", "l3", 0.13591, 0.30233),
    ("r_c_normal", "l4", 0.0, 0.55532),
]


def check_table(failures, table, tol):
    for name, goal, p_min, p_max in table:
        lo, hi, _, _ = values(name, goal)
        if lo.method != "exact" or hi.method != "exact":
            failures.append(f"{name} {goal} not on the exact path")
        check_exact(failures, f"{name} min {goal}", lo.value, p_min, tol)
        check_exact(failures, f"{name} max {goal}", hi.value, p_max, tol)


def check_half(failures, name, samples):
    for goal in ("l1", "l2"):
        lo, hi, _, _ = values(name, goal, samples=samples)
        if lo.value != hi.value:
            failures.append(f"{name} {goal}: min {lo.value} differs from max {hi.value}")
        if abs(lo.value - 0.5) > 4 * lo.stat_error:
            failures.append(f"{name} {goal} = {lo.value:.5f} outside 0.5 ± {4 * lo.stat_error:.5f}")


def test_criterion_2_uniform_small_examples():
    failures = []
    start = cold()
    check_table(failures, UNIFORM_TABLE, EXACT)
    check_half(failures, "r_d_uniform", 1_000_000)
    report(2, failures, time.perf_counter() - start, 5.0, "R_A to R_C exact, R_D within 4 sigma at 1e6 samples")


def test_criterion_3_folded_normal_small_examples():
    failures = []
    start = cold()
    check_table(failures, NORMAL_TABLE, 1e-4)
    check_half(failures, "r_d_normal", 100_000)
    report(3, failures, time.perf_counter() - start, 10.0,
           "R_A to R_C within 1e-4 on the exact path, R_D within 4 sigma")


# -- 4 ------------------------------------------------------------------------------

CAR_TABLE = [("car0_a_singular", 0.1826), ("car0_a_rectangular", 0.1031)]


def test_criterion_4_car():
    failures, stats = [], []
    start = cold()
    for name, want in CAR_TABLE:
        (lo,) = run_query(model(name), case(name).query("empty", mode="min"))
        if abs(lo.probability.value - want) > 0.02:
            failures.append(f"{name} min = {lo.probability.value:.4f}, expected {want} ± 0.02")
        stats.append(f"{name} |R|={lo.reach_nodes} |T*|={lo.modified_nodes}")
        if lo.reach_nodes != 8:
            failures.append(f"{name} |R| = {lo.reach_nodes}, expected 8")
        if lo.modified_nodes != 38:
            failures.append(f"{name} |T*| = {lo.modified_nodes}, expected 38")
    report(4, failures, time.perf_counter() - start, 60.0, "CAR0 variant A, " + ", ".join(stats))


# -- 5 ------------------------------------------------------------------------------


def test_criterion_5_oracle_cross_validation():
    failures, worst = [], 0.0
    start = cold()
    for c in small_cases():
        m = model(c.model)
        for goal in c.goals:
            for result in run_query(m, c.query(goal)):
                mode = result.mode
                oracle = oracle_probability(m, {goal}, c.t_max, c.j_max, mode).value
                gap = abs(oracle - result.probability.value)
                worst = max(worst, gap)
                if gap > 0.03:
                    failures.append(f"{c.model} {mode} {goal}: pipeline {result.probability.value:.4f}, "
                                    f"oracle {oracle:.4f}")
    report(5, failures, time.perf_counter() - start, 300.0, f"largest gap {worst:.4f}")


# -- 6 ------------------------------------------------------------------------------

GEOMETRY_LAWS = [
    test_geometry.test_intersect_commutes,
    test_geometry.test_intersect_associates,
    test_geometry.test_intersect_idempotent,
    test_geometry.test_difference_union_intersection_recovers,
    test_geometry.test_difference_is_disjoint_from_subtrahend,
    test_geometry.test_full_dimensional_implies_nonempty,
    test_geometry.test_up_closure_monotone_and_idempotent,
    test_geometry.test_eliminate_commutes_with_unrelated_constraint,
    test_geometry.test_difference_agrees_with_sampling,
]


def test_criterion_6_property_suites():
    checks = [(f.__name__, f, ()) for f in GEOMETRY_LAWS]
    checks.append(("time successor", test_reach.test_time_successor_contains_source_and_is_idempotent, ()))
    for name, goal in test_transform.CORPUS_QUERIES:
        checks.append((f"rewrites {name} {goal}", test_transform.test_rewrites_preserve_paths_and_split_conditions,
                       (name, goal)))
        checks.append((f"min inside max {name} {goal}", test_collect.test_min_region_inside_max_region,
                       (name, goal)))
    for distrs in ([test_probability.U5, test_probability.U10], [test_probability.N32, test_probability.EXP1],
                   [test_probability.U5, test_probability.N32, test_probability.EXP1]):
        checks.append((f"full space {len(distrs)}-D", test_probability.test_full_space_integrates_to_one, (distrs,)))
    fragments = (("fragment_stochastic", Branch.STOCHASTIC), ("fragment_nondeterministic", Branch.NONDETERMINISTIC),
                 ("fragment_mixed", Branch.MIXED))
    for name, tag in fragments:
        checks.append((f"classify {name}", test_prophecy.test_branching_fragments, (name, tag)))
    failures = []
    start = cold()
    for label, check, args in checks:
        try:
            check(*args)
        except AssertionError as exc:
            failures.append(f"{label}: {str(exc).splitlines()[0] if str(exc) else 'assertion failed'}")
    report(6, failures, time.perf_counter() - start, math.inf, f"{len(checks)} property checks")


# -- 7 ------------------------------------------------------------------------------


def commands() -> list[list[str]]:
    out = []

    def prob(name, goals, samples, mode="both"):
        c = case(name)
        argv = ["prob", "--model", str(MODELS / f"{name}.json"), "--tmax", str(c.t_max), "--jmax", str(c.j_max),
                "--mode", mode, "--samples", str(samples), "--seed", "7"]
        for g in goals:
            out.append(argv + ["--goal", g])

    prob("running_example", RUNNING_TABLE, 100_000)
    for name in ("r_a_uniform", "r_b_uniform", "r_c_uniform", "r_a_normal", "r_b_normal", "r_c_normal"):
        prob(name, case(name).goals, 100_000)
    prob("r_d_uniform", ("l1", "l2"), 1_000_000)
    prob("r_d_normal", ("l1", "l2"), 100_000)
    for name, _ in CAR_TABLE:
        prob(name, ("empty",), 100_000, "min")
    return out


def probability_fields(argv: list[str]) -> str:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    assert code == 0, argv
    doc = json.loads(buf.getvalue())
    fields = [{k: r[k] for k in ("mode", "probability", "stat_error", "method", "samples", "seed")}
              for r in doc["results"]]
    return json.dumps(fields)


def test_criterion_7_determinism():
    failures = []
    start = cold()
    runs = commands()
    for argv in runs:
        first = probability_fields(argv)
        cold()
        if probability_fields(argv) != first:
            failures.append(" ".join(argv[1:3] + argv[-2:]))
    report(7, failures, time.perf_counter() - start, math.inf, f"{len(runs)} commands run twice, identical output")
