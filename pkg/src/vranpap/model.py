"""Domain types, cost functions and feasibility checking for BBU placement.

Sites and candidates are identified by their position: ``sites[i].id == i``
and ``candidates[j].id == j``.  The fronthaul matrices are row-major with
one row per site and one column per candidate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

# Absolute tolerance for objective comparisons and capacity checks.
TOL = 1e-9


class InstanceError(ValueError):
    """Malformed instance or solution data.

    ``field`` names the offending JSON path, e.g. ``sites[3].demand``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class RrhSite:
    id: int
    x: float
    y: float
    demand: float
    desired_latency: float
    ue_count: int = 0  # carried along, never used in any computation

    def __post_init__(self):
        if not self.demand > 0:
            raise InstanceError(f"sites[{self.id}].demand", "must be > 0")
        if not self.desired_latency > 0:
            raise InstanceError(f"sites[{self.id}].desired_latency", "must be > 0")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InstanceError(f"sites[{self.id}]", "position must be finite")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class BbuCandidate:
    id: int
    site_id: int
    capacity: float
    fixed_cost: float
    marginal_cost: float = 1.0

    def __post_init__(self):
        if not self.capacity > 0:
            raise InstanceError(f"candidates[{self.id}].capacity", "must be > 0")
        if not self.fixed_cost >= 0:
            raise InstanceError(f"candidates[{self.id}].fixed_cost", "must be >= 0")
        if not self.marginal_cost >= 0:
            raise InstanceError(f"candidates[{self.id}].marginal_cost", "must be >= 0")


def _frozen_matrix(values, name: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError):
        raise InstanceError(f"fronthaul.{name}", "expected a 2D array of numbers") from None
    if arr.ndim != 2:
        raise InstanceError(f"fronthaul.{name}", "expected a 2D array of numbers")
    if not np.all(np.isfinite(arr)):
        raise InstanceError(f"fronthaul.{name}", "contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FronthaulParams:
    """Per-pair fronthaul data plus the bandwidth constants.

    ``omega`` is the fixed link cost, ``latency`` the link latency in seconds
    and ``distance`` the path length in grid units.  The bandwidth a link
    needs is ``gamma * demand``; each bandwidth unit costs ``chi``.
    """

    omega: np.ndarray
    latency: np.ndarray
    distance: np.ndarray
    gamma: float = 1.0
    chi: float = 1.0

    def __post_init__(self):
        for name in ("omega", "latency", "distance"):
            object.__setattr__(self, name, _frozen_matrix(getattr(self, name), name))
        shape = self.omega.shape
        for name in ("latency", "distance"):
            if getattr(self, name).shape != shape:
                raise InstanceError(f"fronthaul.{name}", f"shape must match omega {shape}")
        if np.any(self.omega < 0):
            raise InstanceError("fronthaul.omega", "costs must be >= 0")
        if np.any(self.latency <= 0):
            raise InstanceError("fronthaul.latency", "latencies must be > 0")
        if np.any(self.distance < 0):
            raise InstanceError("fronthaul.distance", "distances must be >= 0")
        if not self.gamma >= 0:
            raise InstanceError("fronthaul.gamma", "must be >= 0")
        if not self.chi >= 0:
            raise InstanceError("fronthaul.chi", "must be >= 0")


def server_cost(candidate: BbuCandidate) -> float:
    """Cost of installing a server: fixed part plus marginal cost per capacity unit."""
    return candidate.fixed_cost + candidate.marginal_cost * candidate.capacity


def link_bandwidth(site: RrhSite, gamma: float) -> float:
    return gamma * site.demand


def link_cost(site: RrhSite, candidate_id: int, fronthaul: FronthaulParams) -> float:
    """Fixed cost of the site-candidate link plus its bandwidth-dependent part."""
    rows, cols = fronthaul.omega.shape
    if not (0 <= site.id < rows and 0 <= candidate_id < cols):
        raise IndexError(f"pair ({site.id}, {candidate_id}) outside {rows}x{cols} fronthaul matrix")
    omega = float(fronthaul.omega[site.id, candidate_id])
    return omega + fronthaul.chi * link_bandwidth(site, fronthaul.gamma)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    sites: tuple[RrhSite, ...]
    candidates: tuple[BbuCandidate, ...]
    fronthaul: FronthaulParams
    budget: int
    alpha: float = 1.0
    beta: float = 1.0
    # Clamp negative latency deviations to zero in the objective (experiments only).
    clamp_latency: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        n, m = len(self.sites), len(self.candidates)
        if n == 0:
            raise InstanceError("sites", "at least one site is required")
        if m == 0:
            raise InstanceError("candidates", "at least one candidate is required")
        for i, site in enumerate(self.sites):
            if site.id != i:
                raise InstanceError(f"sites[{i}].id", f"expected {i}, got {site.id}")
        for j, cand in enumerate(self.candidates):
            if cand.id != j:
                raise InstanceError(f"candidates[{j}].id", f"expected {j}, got {cand.id}")
            if not 0 <= cand.site_id < n:
                raise InstanceError(f"candidates[{j}].site_id", f"no site {cand.site_id}")
        if m > n:
            raise InstanceError("candidates", f"{m} candidates exceed {n} sites")
        if self.fronthaul.omega.shape != (n, m):
            raise InstanceError(
                "fronthaul.omega", f"shape {self.fronthaul.omega.shape} != ({n}, {m})"
            )
        if isinstance(self.budget, bool) or int(self.budget) != self.budget:
            raise InstanceError("budget", "must be an integer")
        object.__setattr__(self, "budget", int(self.budget))
        if not 1 <= self.budget <= m:
            raise InstanceError("budget", f"must satisfy 1 <= budget <= {m}")
        if not self.alpha >= 0:
            raise InstanceError("alpha", "must be >= 0")
        if not self.beta >= 0:
            raise InstanceError("beta", "must be >= 0")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    # Vectorised views used by the solvers.  Read-only arrays.

    @cached_property
    def demand(self) -> np.ndarray:
        return _readonly([s.demand for s in self.sites])

    @cached_property
    def desired_latency(self) -> np.ndarray:
        return _readonly([s.desired_latency for s in self.sites])

    @cached_property
    def capacity(self) -> np.ndarray:
        return _readonly([c.capacity for c in self.candidates])

    @cached_property
    def server_costs(self) -> np.ndarray:
        return _readonly([server_cost(c) for c in self.candidates])

    @cached_property
    def link_costs(self) -> np.ndarray:
        fh = self.fronthaul
        return _readonly(fh.omega + fh.chi * fh.gamma * self.demand[:, None])

    @cached_property
    def latency_excess(self) -> np.ndarray:
        """Per-pair signed deviation of link latency from the site's target."""
        dev = self.fronthaul.latency - self.desired_latency[:, None]
        if self.clamp_latency:
            dev = np.maximum(dev, 0.0)
        return _readonly(dev)

    @cached_property
    def assignment_costs(self) -> np.ndarray:
        """Weighted objective contribution of every possible assignment."""
        return _readonly(self.alpha * self.link_costs + self.beta * self.latency_excess)

    def with_budget(self, budget: int) -> "ProblemInstance":
        return ProblemInstance(
            self.sites, self.candidates, self.fronthaul, budget,
            self.alpha, self.beta, self.clamp_latency,
        )


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


class Breakdown(NamedTuple):
    total: float
    cost_component: float
    latency_component: float


@dataclass(frozen=True)
class Solution:
    placed: frozenset[int]
    assignment: Mapping[int, int]
    objective: float
    cost_component: float
    latency_component: float

    def __post_init__(self):
        object.__setattr__(self, "placed", frozenset(self.placed))
        object.__setattr__(self, "assignment", dict(self.assignment))

    def assignment_tuple(self) -> tuple[int, ...]:
        return tuple(self.assignment[i] for i in sorted(self.assignment))

    def sort_key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Ordering used to break ties between equal-objective solutions."""
        return (tuple(sorted(self.placed)), self.assignment_tuple())


class IncompleteSolutionError(ValueError):
    pass


def objective(instance: ProblemInstance, solution: Solution) -> Breakdown:
    return _breakdown(instance, solution.placed, solution.assignment)


def _breakdown(instance, placed, assignment) -> Breakdown:
    n = instance.n_sites
    missing = [i for i in range(n) if i not in assignment]
    if missing:
        raise IncompleteSolutionError(f"sites without assignment: {missing}")
    for i, j in assignment.items():
        if not (0 <= i < n and 0 <= j < instance.n_candidates):
            raise IncompleteSolutionError(f"assignment {i}->{j} outside the instance")
    for j in placed:
        if not 0 <= j < instance.n_candidates:
            raise IncompleteSolutionError(f"placed candidate {j} outside the instance")
    # fsum makes the result independent of summation order.
    server = [float(instance.server_costs[j]) for j in placed]
    links = [float(instance.link_costs[i, assignment[i]]) for i in range(n)]
    latency = math.fsum(float(instance.latency_excess[i, assignment[i]]) for i in range(n))
    cost = math.fsum(server + links)
    total = instance.alpha * cost + instance.beta * latency
    return Breakdown(total, cost, latency)


def evaluate(
    instance: ProblemInstance, placed: Iterable[int], assignment: Mapping[int, int] | Sequence[int]
) -> Solution:
    """Build a :class:`Solution` with its objective filled in.

    ``assignment`` may be a mapping ``site -> candidate`` or a sequence indexed
    by site.
    """
    if not isinstance(assignment, Mapping):
        assignment = {i: int(j) for i, j in enumerate(assignment)}
    else:
        assignment = {int(i): int(j) for i, j in assignment.items()}
    placed = frozenset(int(j) for j in placed)
    total, cost, latency = _breakdown(instance, placed, assignment)
    return Solution(placed, assignment, total, cost, latency)


@dataclass(frozen=True)
class Violation:
    constraint: str  # assignment | placement | budget | capacity | unknown_id
    message: str
    site_id: int | None = None
    candidate_id: int | None = None
    excess: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = ()
    # Binary variable domains cannot be violated: placements are a set and
    # assignments are pairs, so there is nothing to report for them.
    structurally_enforced: tuple[str, ...] = field(default=("binary_placement", "binary_assignment"))

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_constraint(self, name: str) -> list[Violation]:
        return [v for v in self.violations if v.constraint == name]

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [v.to_dict() for v in self.violations],
            "structurally_enforced": list(self.structurally_enforced),
        }


def check_feasibility(instance: ProblemInstance, solution: Solution) -> FeasibilityReport:
    return check_assignment(instance, solution.placed, solution.assignment.items())


def check_assignment(
    instance: ProblemInstance, placed: Iterable[int], pairs: Iterable[tuple[int, int]]
) -> FeasibilityReport:
    """Check raw (site, candidate) pairs, so duplicated sites can be reported."""
    n, m = instance.n_sites, instance.n_candidates
    placed = set(placed)
    violations: list[Violation] = []

    for j in sorted(placed):
        if not 0 <= j < m:
            violations.append(Violation("unknown_id", f"placed candidate {j} does not exist", candidate_id=j))

    targets: dict[int, list[int]] = {}
    for i, j in pairs:
        if not 0 <= i < n:
            violations.append(Violation("unknown_id", f"site {i} does not exist", site_id=i))
            continue
        if not 0 <= j < m:
            violations.append(Violation("unknown_id", f"candidate {j} does not exist", site_id=i, candidate_id=j))
            continue
        targets.setdefault(i, []).append(j)

    for i in range(n):
        got = targets.get(i, [])
        if len(got) != 1:
            what = "unassigned" if not got else f"assigned {len(got)} times"
            violations.append(Violation("assignment", f"site {i} is {what}", site_id=i))

    load = np.zeros(m)
    for i, js in sorted(targets.items()):
        for j in js:
            load[j] += instance.demand[i]
            if j not in placed:
                violations.append(
                    Violation("placement", f"site {i} assigned to unplaced candidate {j}", site_id=i, candidate_id=j)
                )

    if len(placed) > instance.budget:
        violations.append(
            Violation("budget", f"{len(placed)} servers placed, budget is {instance.budget}",
                      excess=float(len(placed) - instance.budget))
        )

    for j in range(m):
        if load[j] > instance.capacity[j] + TOL:
            excess = float(load[j] - instance.capacity[j])
            violations.append(
                Violation("capacity", f"candidate {j} load {load[j]:g} exceeds capacity {instance.capacity[j]:g}",
                          candidate_id=j, excess=excess)
            )
    return FeasibilityReport(tuple(violations))


# JSON serialization -------------------------------------------------------


def instance_to_dict(instance: ProblemInstance) -> dict[str, Any]:
    fh = instance.fronthaul
    doc = {
        "sites": [
            {"id": s.id, "x": s.x, "y": s.y, "demand": s.demand,
             "desired_latency": s.desired_latency, "ue_count": s.ue_count}
            for s in instance.sites
        ],
        "candidates": [
            {"id": c.id, "site_id": c.site_id, "capacity": c.capacity,
             "fixed_cost": c.fixed_cost, "marginal_cost": c.marginal_cost}
            for c in instance.candidates
        ],
        "fronthaul": {
            "omega": fh.omega.tolist(),
            "latency": fh.latency.tolist(),
            "distance": fh.distance.tolist(),
            "gamma": fh.gamma,
            "chi": fh.chi,
        },
        "budget": instance.budget,
        "alpha": instance.alpha,
        "beta": instance.beta,
    }
    if instance.clamp_latency:
        doc["clamp_latency"] = True
    return doc


def _get(doc: Any, key: str, path: str, kind=float, default: Any = ...):
    where = f"{path}.{key}" if path else key
    if not isinstance(doc, Mapping):
        raise InstanceError(path or "<root>", "expected an object")
    if key not in doc:
        if default is ...:
            raise InstanceError(where, "missing")
        return default
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InstanceError(where, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise InstanceError(where, f"expected an integer, got {value!r}")
        return int(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise InstanceError(where, f"expected true/false, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise InstanceError(where, "expected an array")
        return value
    return value


def instance_from_dict(doc: Mapping[str, Any]) -> ProblemInstance:
    sites = [
        RrhSite(
            id=_get(s, "id", f"sites[{k}]", int),
            x=_get(s, "x", f"sites[{k}]"),
            y=_get(s, "y", f"sites[{k}]"),
            demand=_get(s, "demand", f"sites[{k}]"),
            desired_latency=_get(s, "desired_latency", f"sites[{k}]"),
            ue_count=_get(s, "ue_count", f"sites[{k}]", int, 0),
        )
        for k, s in enumerate(_get(doc, "sites", "", list))
    ]
    candidates = [
        BbuCandidate(
            id=_get(c, "id", f"candidates[{k}]", int),
            site_id=_get(c, "site_id", f"candidates[{k}]", int),
            capacity=_get(c, "capacity", f"candidates[{k}]"),
            fixed_cost=_get(c, "fixed_cost", f"candidates[{k}]"),
            marginal_cost=_get(c, "marginal_cost", f"candidates[{k}]"),
        )
        for k, c in enumerate(_get(doc, "candidates", "", list))
    ]
    fh = _get(doc, "fronthaul", "", object)
    fronthaul = FronthaulParams(
        omega=_get(fh, "omega", "fronthaul", list),
        latency=_get(fh, "latency", "fronthaul", list),
        distance=_get(fh, "distance", "fronthaul", list),
        gamma=_get(fh, "gamma", "fronthaul"),
        chi=_get(fh, "chi", "fronthaul"),
    )
    return ProblemInstance(
        sites=sites,
        candidates=candidates,
        fronthaul=fronthaul,
        budget=_get(doc, "budget", "", int),
        alpha=_get(doc, "alpha", ""),
        beta=_get(doc, "beta", ""),
        clamp_latency=_get(doc, "clamp_latency", "", bool, False),
    )


def dumps_instance(instance: ProblemInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1)


def loads_instance(text: str) -> ProblemInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError("<document>", f"invalid JSON ({exc})") from None
    return instance_from_dict(doc)


def solution_to_dict(solution: Solution) -> dict[str, Any]:
    return {
        "placed": sorted(solution.placed),
        "assignment": [[i, j] for i, j in sorted(solution.assignment.items())],
        "objective": solution.objective,
        "cost_component": solution.cost_component,
        "latency_component": solution.latency_component,
    }


def solution_pairs_from_dict(doc: Mapping[str, Any]) -> tuple[list[int], list[tuple[int, int]]]:
    """Raw placed list and assignment pairs, duplicates preserved."""
    placed_raw = _get(doc, "placed", "", list)
    placed = []
    for k, j in enumerate(placed_raw):
        if isinstance(j, bool) or not isinstance(j, int):
            raise InstanceError(f"placed[{k}]", f"expected an integer, got {j!r}")
        placed.append(j)
    pairs = []
    for k, pair in enumerate(_get(doc, "assignment", "", list)):
        if (
            not isinstance(pair, list) or len(pair) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in pair)
        ):
            raise InstanceError(f"assignment[{k}]", "expected a [site, candidate] pair of integers")
        pairs.append((pair[0], pair[1]))
    return placed, pairs


def solution_from_dict(instance: ProblemInstance, doc: Mapping[str, Any]) -> Solution:
    placed, pairs = solution_pairs_from_dict(doc)
    assignment: dict[int, int] = {}
    for k, (i, j) in enumerate(pairs):
        if i in assignment:
            raise InstanceError(f"assignment[{k}]", f"site {i} assigned twice")
        assignment[i] = j
    try:
        return evaluate(instance, placed, assignment)
    except IncompleteSolutionError as exc:
        raise InstanceError("assignment", str(exc)) from None
