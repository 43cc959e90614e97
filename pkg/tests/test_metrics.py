import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build_instance
from vranpap.exact import solve_exact
from vranpap.greedy import solve_caga
from vranpap.metrics import latency_deviation, summarize, utilization
from vranpap.model import evaluate
from vranpap.topology import GeneratorConfig, generate_instance


def test_utilization_of_a_single_server():
    inst = build_instance(demand=[60, 80], capacity=[150, 150], fixed_cost=[0, 0], link=[[1, 1], [1, 1]])
    assert utilization(inst, evaluate(inst, [0], [0, 0])) == pytest.approx(140 / 150)


def test_saturated_capacity_is_one():
    inst = build_instance(demand=[50, 100], capacity=[50, 100], fixed_cost=[0, 0], link=[[1, 1], [1, 1]])
    assert utilization(inst, evaluate(inst, [0, 1], [0, 1])) == 1.0


def test_failed_run_gives_zero_row(infeasible3x1):
    out = solve_caga(infeasible3x1)
    assert utilization(infeasible3x1, out.solution) == 0
    row = summarize(infeasible3x1, out)
    assert (row.total_cost, row.bbus_placed, row.utilization, row.latency_deviation, row.feasible) == (0, 0, 0, 0, False)
    assert summarize(infeasible3x1, solve_exact(infeasible3x1)).feasible is False


def _latency_case(latencies, desired):
    n = len(latencies)
    return build_instance(
        demand=[10] * n, capacity=[100] * n, fixed_cost=[0] * n,
        link=[[1] * n for _ in range(n)], latency=[[t] * n for t in latencies], desired_latency=desired,
        beta=1.0,
    )


@pytest.mark.parametrize(
    "latencies, desired, expected",
    [([2e-7], [1e-7], 1e-7), ([3e-7, 5e-7], [3e-7, 5e-7], 0.0), ([2e-7, 1e-7], [1e-7, 2e-7], 0.0)],
)
def test_latency_deviation_examples(latencies, desired, expected):
    inst = _latency_case(latencies, desired)
    sol = evaluate(inst, [0], [0] * len(latencies))
    assert latency_deviation(inst, sol) == pytest.approx(expected, abs=1e-22)


def test_greedy_fixture_row(fixture3x2):
    row = summarize(fixture3x2, solve_caga(fixture3x2))
    assert row.total_cost == 275 and row.bbus_placed == 2 and row.feasible
    assert row.utilization == pytest.approx(210 / 350)


def test_exact_fixture_row(fixture3x2):
    row = summarize(fixture3x2, solve_exact(fixture3x2))
    assert row.total_cost == 260 and row.bbus_placed == 2


def test_total_cost_ignores_objective_weights(fixture3x2):
    heavy = build_instance(
        demand=[60, 80, 70], capacity=[150, 200], fixed_cost=[100, 120],
        link=[[10, 15], [20, 5], [30, 25]], budget=2, alpha=3.0,
    )
    assert summarize(heavy, solve_caga(heavy)).total_cost == 275


def test_explicit_wall_time_is_kept(fixture3x2):
    assert summarize(fixture3x2, solve_caga(fixture3x2), wall_time=1.5).wall_time == 1.5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 20), st.data())
def test_metric_identities(seed, n, data):
    p = data.draw(st.integers(1, n))
    inst = generate_instance(GeneratorConfig(site_count=n, rng_seed=seed), p)
    out = solve_caga(inst)
    row = summarize(inst, out)
    if out.solution is None:
        assert not row.feasible and row.total_cost == 0
        return
    sol = out.solution
    assert 0 < row.utilization <= 1 + 1e-12
    assert row.total_cost == sol.cost_component
    assert math.isclose(row.latency_deviation * n, sol.latency_component, rel_tol=1e-12, abs_tol=1e-18)
    assert row.bbus_placed == len(sol.placed)
