import numpy as np
import pytest

from vranpap.model import BbuCandidate, FronthaulParams, ProblemInstance, RrhSite


def build_instance(
    demand,
    capacity,
    fixed_cost,
    link,
    *,
    marginal_cost=None,
    desired_latency=None,
    latency=None,
    budget=None,
    alpha=1.0,
    beta=0.0,
    gamma=0.0,
    chi=0.0,
    clamp_latency=False,
):
    """Hand-sized instance.  With the default gamma = chi = 0 the link cost
    equals ``link`` exactly."""
    link = np.asarray(link, dtype=float)
    n, m = link.shape
    marginal_cost = [0.0] * m if marginal_cost is None else marginal_cost
    desired_latency = [1e-7] * n if desired_latency is None else desired_latency
    latency = np.full((n, m), 1e-7) if latency is None else np.asarray(latency, dtype=float)
    sites = [RrhSite(i, float(i), 0.0, float(demand[i]), float(desired_latency[i])) for i in range(n)]
    candidates = [
        BbuCandidate(j, min(j, n - 1), float(capacity[j]), float(fixed_cost[j]), float(marginal_cost[j]))
        for j in range(m)
    ]
    fronthaul = FronthaulParams(link, latency, np.zeros((n, m)), gamma=gamma, chi=chi)
    return ProblemInstance(sites, candidates, fronthaul, budget or m, alpha, beta, clamp_latency)


@pytest.fixture
def fixture3x2():
    """Three sites, two candidates: greedy pays 275, the optimum is cheaper."""
    return build_instance(
        demand=[60, 80, 70],
        capacity=[150, 200],
        fixed_cost=[100, 120],
        link=[[10, 15], [20, 5], [30, 25]],
        budget=2,
    )


@pytest.fixture
def infeasible3x1():
    """Three sites with total demand 210 and a single server of capacity 200."""
    return build_instance(
        demand=[60, 80, 70],
        capacity=[200, 150, 100],
        fixed_cost=[100, 100, 100],
        link=[[1, 2, 3], [1, 2, 3], [1, 2, 3]],
        budget=1,
    )


@pytest.fixture
def forced1x1():
    return build_instance(
        demand=[60], capacity=[100], fixed_cost=[100], marginal_cost=[1.0],
        link=[[10]], latency=[[1e-7]], desired_latency=[1e-7], budget=1, beta=1.0,
    )
