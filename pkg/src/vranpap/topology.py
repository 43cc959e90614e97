"""Random RAN topologies and the instances derived from them.

Nodes are scattered uniformly on a square grid and joined with Waxman edge
probabilities.  Fronthaul cost between two sites is the summed per-hop fixed
cost along the cheapest path; distance and latency follow that same path.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import numpy as np

from .model import BbuCandidate, FronthaulParams, ProblemInstance, RrhSite


class TopologyError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    site_count: int
    grid_size: float = 500.0
    waxman_alpha: float = 0.4
    waxman_beta: float = 0.4
    hop_fixed_cost: float = 500.0
    demand_range: tuple[float, float] = (50.0, 100.0)
    capacity_range: tuple[float, float] = (250.0, 500.0)
    latency_range: tuple[float, float] = (1e-7, 1e-6)
    signal_speed: float = 5e8  # grid units per second
    self_latency: float = 1e-9  # latency of a co-located site and server
    server_fixed_cost: float = 500.0
    server_marginal_cost: float = 1.0
    gamma: float = 1.0
    chi: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.site_count < 1:
            raise ValueError("site_count must be >= 1")
        if not self.grid_size > 0:
            raise ValueError("grid_size must be > 0")
        if not 0 < self.waxman_alpha <= 1:
            raise ValueError("waxman_alpha must lie in (0, 1]")
        # An infinite beta is allowed: every edge then has probability alpha.
        if not self.waxman_beta > 0:
            raise ValueError("waxman_beta must be > 0")
        for name in ("demand_range", "capacity_range", "latency_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < low <= high")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.hop_fixed_cost < 0:
            raise ValueError("hop_fixed_cost must be >= 0")
        if not self.signal_speed > 0 or not self.self_latency > 0:
            raise ValueError("signal_speed and self_latency must be > 0")

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        for name in ("demand_range", "capacity_range", "latency_range"):
            doc[name] = list(doc[name])
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "GeneratorConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown generator fields: {sorted(unknown)}")
        if "site_count" not in doc:
            raise ValueError("site_count: missing")
        kwargs = {}
        for name, value in doc.items():
            kwargs[name] = _coerce(name, value, "site_count" if name == "rng_seed" else name)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ValueError(str(exc)) from None


_RANGE_FIELDS = ("demand_range", "capacity_range", "latency_range")


def _coerce(name: str, value: Any, kind: str):
    """Type-check one JSON field, naming it in the error."""
    def number(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"{name}: expected a number, got {v!r}")
        return v

    if kind in _RANGE_FIELDS:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ValueError(f"{name}: expected a [low, high] pair, got {value!r}")
        return tuple(float(number(v)) for v in value)
    if kind == "site_count":
        if number(value) != int(value):
            raise ValueError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    return float(number(value))


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    hop_fixed_cost: float
    length: float


@dataclass(frozen=True)
class RanGraph:
    positions: tuple[tuple[float, float], ...]
    edges: tuple[Edge, ...] = field(default=())

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    def adjacency(self) -> list[list[tuple[int, float, float]]]:
        adj: list[list[tuple[int, float, float]]] = [[] for _ in self.positions]
        for e in self.edges:
            adj[e.a].append((e.b, e.hop_fixed_cost, e.length))
            adj[e.b].append((e.a, e.hop_fixed_cost, e.length))
        return adj

    def is_connected(self) -> bool:
        return len(_components(self.n_nodes, self.edges)) <= 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [{"id": k, "x": x, "y": y} for k, (x, y) in enumerate(self.positions)],
            "edges": [
                {"a": e.a, "b": e.b, "hop_fixed_cost": e.hop_fixed_cost, "length": e.length}
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "RanGraph":
        nodes = sorted(doc["nodes"], key=lambda n: n["id"])
        return cls(
            positions=tuple((float(n["x"]), float(n["y"])) for n in nodes),
            edges=tuple(
                Edge(int(e["a"]), int(e["b"]), float(e["hop_fixed_cost"]), float(e["length"]))
                for e in doc["edges"]
            ),
        )


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([stream, seed & 0xFFFFFFFFFFFFFFFF])


def _components(n: int, edges) -> list[list[int]]:
    parent = list(range(n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for e in edges:
        ra, rb = find(e.a), find(e.b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for u in range(n):
        groups.setdefault(find(u), []).append(u)
    return sorted(groups.values())


def generate_ran(config: GeneratorConfig) -> RanGraph:
    """Waxman random graph on the grid, repaired until connected."""
    n = config.site_count
    rng = _rng(config.rng_seed, 0)
    pos = rng.uniform(0.0, config.grid_size, size=(n, 2))
    dist = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
    diag = config.grid_size * math.sqrt(2.0)

    ia, ib = np.triu_indices(n, k=1)
    prob = np.minimum(1.0, config.waxman_alpha * np.exp(-dist[ia, ib] / (config.waxman_beta * diag)))
    keep = rng.random(ia.size) < prob
    edges = [
        Edge(int(a), int(b), config.hop_fixed_cost, float(dist[a, b]))
        for a, b in zip(ia[keep], ib[keep])
    ]

    # Join the two closest components with their shortest edge until connected.
    for _ in range(n):
        comps = _components(n, edges)
        if len(comps) <= 1:
            break
        label = np.empty(n, dtype=int)
        for k, comp in enumerate(comps):
            label[comp] = k
        between = np.where(label[:, None] != label[None, :], dist, np.inf)
        a, b = np.unravel_index(np.argmin(between), between.shape)
        a, b = int(min(a, b)), int(max(a, b))
        edges.append(Edge(a, b, config.hop_fixed_cost, float(dist[a, b])))
    else:
        if n > 1 and len(_components(n, edges)) > 1:
            raise TopologyError("could not connect the generated topology")

    edges.sort(key=lambda e: (e.a, e.b))
    return RanGraph(tuple((float(x), float(y)) for x, y in pos), tuple(edges))


@dataclass(frozen=True, eq=False)
class PathTable:
    """All-pairs cheapest paths: summed fixed cost, summed length, hop count."""

    cost: np.ndarray
    length: np.ndarray
    hops: np.ndarray
    paths: tuple[tuple[tuple[int, ...], ...], ...]


def _dijkstra(adj, source: int):
    # Key order: fixed cost, then hops, then length, then node sequence.
    n = len(adj)
    best: list[tuple | None] = [None] * n
    done = [False] * n
    start = (0.0, 0, 0.0, (source,))
    best[source] = start
    heap = [start]
    while heap:
        key = heapq.heappop(heap)
        cost, hops, length, path = key
        u = path[-1]
        if done[u] or key != best[u]:
            continue
        done[u] = True
        for v, w_cost, w_len in adj[u]:
            if done[v]:
                continue
            cand = (cost + w_cost, hops + 1, length + w_len, path + (v,))
            if best[v] is None or cand < best[v]:
                best[v] = cand
                heapq.heappush(heap, cand)
    return best


def shortest_paths(graph: RanGraph) -> PathTable:
    n = graph.n_nodes
    adj = graph.adjacency()
    cost = np.zeros((n, n))
    length = np.zeros((n, n))
    hops = np.zeros((n, n), dtype=int)
    paths = []
    for s in range(n):
        best = _dijkstra(adj, s)
        row = []
        for t, key in enumerate(best):
            if key is None:
                raise TopologyError(f"node {t} unreachable from {s}")
            cost[s, t], hops[s, t], length[s, t] = key[0], key[1], key[2]
            row.append(key[3])
        paths.append(tuple(row))
    for arr in (cost, length, hops):
        arr.setflags(write=False)
    return PathTable(cost, length, hops, tuple(paths))


def derive_instance(
    graph: RanGraph,
    config: GeneratorConfig,
    budget: int,
    alpha: float = 1.0,
    beta: float = 1.0,
    clamp_latency: bool = False,
) -> ProblemInstance:
    """Turn a topology into an instance with one candidate per site."""
    n = graph.n_nodes
    rng = _rng(config.rng_seed, 1)
    demand = rng.uniform(*config.demand_range, size=n)
    desired = rng.uniform(*config.latency_range, size=n)
    capacity = rng.uniform(*config.capacity_range, size=n)

    table = shortest_paths(graph)
    latency = table.length / config.signal_speed
    np.fill_diagonal(latency, config.self_latency)

    sites = [
        RrhSite(k, x, y, float(demand[k]), float(desired[k]))
        for k, (x, y) in enumerate(graph.positions)
    ]
    candidates = [
        BbuCandidate(k, k, float(capacity[k]), config.server_fixed_cost, config.server_marginal_cost)
        for k in range(n)
    ]
    fronthaul = FronthaulParams(
        omega=table.cost, latency=latency, distance=table.length,
        gamma=config.gamma, chi=config.chi,
    )
    return ProblemInstance(sites, candidates, fronthaul, budget, alpha, beta, clamp_latency)


def generate_instance(
    config: GeneratorConfig, budget: int, alpha: float = 1.0, beta: float = 1.0
) -> ProblemInstance:
    return derive_instance(generate_ran(config), config, budget, alpha, beta)


def random_instance(
    n_sites: int,
    n_candidates: int,
    budget: int,
    seed: int,
    *,
    demand_range=(50.0, 100.0),
    capacity_range=(100.0, 300.0),
    fixed_cost_range=(0.0, 500.0),
    marginal_cost_range=(0.0, 1.0),
    omega_range=(0.0, 1000.0),
    latency_range=(1e-7, 1e-6),
    alpha: float = 1.0,
    beta: float = 1e9,
) -> ProblemInstance:
    """Topology-free instance with independent uniform data.

    Used to stress the solvers with arbitrary cost matrices and candidate
    counts below the site count.  The default ``beta`` puts the latency term
    on the same scale as the costs.
    """
    rng = _rng(seed, 2)
    pos = rng.uniform(0.0, 500.0, size=(n_sites, 2))
    demand = rng.uniform(*demand_range, size=n_sites)
    desired = rng.uniform(*latency_range, size=n_sites)
    hosts = np.sort(rng.choice(n_sites, size=n_candidates, replace=False))
    capacity = rng.uniform(*capacity_range, size=n_candidates)
    fixed = rng.uniform(*fixed_cost_range, size=n_candidates)
    marginal = rng.uniform(*marginal_cost_range, size=n_candidates)
    omega = rng.uniform(*omega_range, size=(n_sites, n_candidates))
    latency = rng.uniform(*latency_range, size=(n_sites, n_candidates))
    distance = np.hypot(*(pos[:, None, :] - pos[hosts][None, :, :]).transpose(2, 0, 1))

    sites = [
        RrhSite(i, float(pos[i, 0]), float(pos[i, 1]), float(demand[i]), float(desired[i]))
        for i in range(n_sites)
    ]
    candidates = [
        BbuCandidate(j, int(hosts[j]), float(capacity[j]), float(fixed[j]), float(marginal[j]))
        for j in range(n_candidates)
    ]
    fronthaul = FronthaulParams(omega, latency, distance, gamma=1.0, chi=1.0)
    return ProblemInstance(sites, candidates, fronthaul, budget, alpha, beta)
