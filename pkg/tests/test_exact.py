import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build_instance
from vranpap.exact import SolveLimits, SolveStatus, _packable, solve_exact
from vranpap.greedy import GreedyStatus, solve_caga
from vranpap.model import TOL, check_feasibility, evaluate
from vranpap.oracle import InstanceTooLarge, enumerate_optimal, enumeration_count
from vranpap.topology import GeneratorConfig, generate_instance, random_instance


def test_fixture_optimum(fixture3x2):
    out = solve_exact(fixture3x2)
    assert out.status is SolveStatus.OPTIMAL
    # Brute force: i1 -> j1 and i2, i3 -> j2 costs 100 + 120 + 10 + 5 + 25.
    assert out.solution.objective == 260
    assert out.solution.assignment == {0: 0, 1: 1, 2: 1}
    assert out.gap == 0


def test_oracle_agrees_on_fixture(fixture3x2):
    out = enumerate_optimal(fixture3x2)
    assert out.status is SolveStatus.OPTIMAL
    assert out.solution == solve_exact(fixture3x2).solution


def test_forced_single_solution(forced1x1):
    expected = evaluate(forced1x1, [0], [0])
    for out in (solve_exact(forced1x1), enumerate_optimal(forced1x1)):
        assert out.status is SolveStatus.OPTIMAL
        assert out.solution == expected
    assert solve_caga(forced1x1).solution == expected


def test_infeasible_instance(infeasible3x1):
    assert solve_exact(infeasible3x1).status is SolveStatus.INFEASIBLE
    assert solve_exact(infeasible3x1).solution is None
    assert enumerate_optimal(infeasible3x1).status is SolveStatus.INFEASIBLE


def test_infeasible_without_the_shortcut():
    # Total capacity suffices but no packing exists: three sites of 60 on two
    # servers of 100.
    inst = build_instance(demand=[60, 60, 60], capacity=[100, 100], fixed_cost=[1, 1], link=np.ones((3, 2)))
    assert solve_exact(inst).status is SolveStatus.INFEASIBLE
    assert enumerate_optimal(inst).status is SolveStatus.INFEASIBLE


def test_ties_go_to_smallest_placement_and_assignment():
    inst = build_instance(demand=[10, 10], capacity=[100, 100], fixed_cost=[5, 5], link=np.ones((2, 2)), budget=1)
    for out in (solve_exact(inst), enumerate_optimal(inst)):
        assert out.solution.placed == {0}
        assert out.solution.assignment == {0: 0, 1: 0}


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 6), st.data())
def test_matches_enumeration(seed, n, data):
    m = data.draw(st.integers(1, n))
    p = data.draw(st.integers(1, m))
    inst = random_instance(n, m, p, seed)
    exact, oracle = solve_exact(inst), enumerate_optimal(inst)
    assert exact.status is oracle.status
    if oracle.status is SolveStatus.OPTIMAL:
        assert abs(exact.solution.objective - oracle.solution.objective) <= TOL
        assert check_feasibility(inst, exact.solution).ok


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(3, 6))
def test_warm_start_does_not_change_the_optimum(seed, n):
    inst = random_instance(n, n, max(1, n // 2), seed)
    a, b = solve_exact(inst), solve_exact(inst, warm_start=False)
    assert a.status is b.status
    if a.solution is not None:
        assert abs(a.solution.objective - b.solution.objective) <= TOL


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 6))
def test_optimum_never_worsens_with_budget(seed, n):
    inst = random_instance(n, n, 1, seed)
    previous = np.inf
    for p in range(1, n + 1):
        out = solve_exact(inst.with_budget(p))
        value = out.solution.objective if out.solution is not None else np.inf
        assert value <= previous + TOL
        previous = value


@pytest.mark.parametrize("seed", range(6))
def test_dominates_greedy_on_generated_topologies(seed):
    inst = generate_instance(GeneratorConfig(site_count=12, rng_seed=seed), 6)
    exact, greedy = solve_exact(inst), solve_caga(inst)
    assert exact.status is SolveStatus.OPTIMAL
    assert check_feasibility(inst, exact.solution).ok
    if greedy.status is GreedyStatus.SUCCESS:
        assert exact.solution.objective <= greedy.solution.objective + TOL


def test_determinism():
    inst = generate_instance(GeneratorConfig(site_count=15, rng_seed=2), 6)
    a, b = solve_exact(inst), solve_exact(inst)
    assert (a.status, a.solution, a.nodes_explored) == (b.status, b.solution, b.nodes_explored)


def test_node_limit_returns_incumbent_and_gap():
    inst = generate_instance(GeneratorConfig(site_count=25, rng_seed=1), 8)
    out = solve_exact(inst, SolveLimits(node_limit=1))
    assert out.status is SolveStatus.LIMIT_REACHED
    greedy = solve_caga(inst)
    if greedy.status is GreedyStatus.SUCCESS:
        assert out.solution is not None
        assert out.solution.objective <= greedy.solution.objective + TOL
        assert out.gap is not None and out.gap >= 0
        assert out.lower_bound <= out.solution.objective + TOL


def test_limits_must_be_non_negative():
    with pytest.raises(ValueError):
        SolveLimits(time_limit=-1)
    with pytest.raises(ValueError):
        SolveLimits(node_limit=-5)


# Packing bound used inside the search -------------------------------------

def _packs(demand, residual):
    for cols in itertools.product(range(len(residual)), repeat=len(demand)):
        load = np.zeros(len(residual))
        for d, c in zip(demand, cols):
            load[c] += d
        if np.all(load <= residual + TOL):
            return True
    return False


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(1, 100, allow_nan=False), min_size=1, max_size=6),
    st.lists(st.floats(0, 200, allow_nan=False), min_size=1, max_size=3),
)
def test_packing_bound_never_rejects_a_packable_set(demand, residual):
    demand, residual = np.array(demand), np.array(residual)
    if _packs(demand, residual):
        assert _packable(demand, residual)


def test_packing_bound_rejects_obvious_waste():
    # Two bins of 100 hold at most one 60 each.
    assert not _packable(np.array([60.0, 60.0, 60.0]), np.array([100.0, 100.0]))


# Oracle ---------------------------------------------------------------------

@pytest.mark.parametrize("n, m, p", [(3, 2, 2), (4, 3, 2), (5, 5, 3), (2, 1, 1)])
def test_enumeration_count(n, m, p):
    inst = random_instance(n, m, p, seed=n * 10 + m)
    assert enumerate_optimal(inst).nodes_explored == enumeration_count(n, m, p)


def test_enumeration_count_formula():
    # C(2,1) * 1**3 + C(2,2) * 2**3
    assert enumeration_count(3, 2, 2) == 2 + 8


def test_oracle_size_guard():
    with pytest.raises(InstanceTooLarge):
        enumerate_optimal(random_instance(9, 2, 1, seed=0))
