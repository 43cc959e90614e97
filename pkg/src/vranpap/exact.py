"""Depth-first branch and bound for the placement and assignment program.

The search first fixes placements one candidate at a time (in decreasing
capacity per unit of server cost), then, with the open set fixed, assigns
sites one at a time.  Every node is bounded twice:

* the cheap bound: committed cost plus, for every unassigned site, its
  cheapest assignment among candidates that could still take it;
* a Lagrangian bound obtained by pricing out the "assign every site once"
  constraints.  For fixed prices each candidate solves a fractional
  knapsack over the sites, and the best ``slots`` free candidates are
  opened.  The prices are improved by subgradient steps and inherited by
  child nodes.  Prices equal to the cheapest assignment costs reproduce the
  cheap bound, which is where the root starts.

Assignment nodes are also dropped when the remaining sites provably cannot
be packed into the residual capacities.  Incumbents come from the greedy
solver and from a local-search packing of each open set the search meets.
A node is pruned when its bound is within ``TOL`` of the incumbent.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from .greedy import GreedyStatus, solve_caga
from .model import TOL, ProblemInstance, Solution, evaluate


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    LIMIT_REACHED = "limit_reached"


@dataclass(frozen=True)
class SolveLimits:
    time_limit: float = 0.0  # seconds, 0 = unlimited
    node_limit: int = 0  # 0 = unlimited

    def __post_init__(self):
        if self.time_limit < 0 or self.node_limit < 0:
            raise ValueError("limits must be non-negative")


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    solution: Solution | None
    nodes_explored: int
    wall_time: float
    lower_bound: float | None = None

    @property
    def gap(self) -> float | None:
        """Absolute distance between the incumbent and the proven bound."""
        if self.solution is None or self.lower_bound is None:
            return None
        return max(0.0, self.solution.objective - self.lower_bound)


class _LimitReached(Exception):
    pass


@dataclass
class _Relaxation:
    bound: float
    prices: np.ndarray
    selected: np.ndarray  # bool over the available candidates
    flow: np.ndarray  # (candidates, sites) fractional assignment
    integral: bool


def _lagrangian(costs, demand, cap, open_cost, forced, slots, base, prices, upper, iters):
    """Best Lagrangian bound found by ``iters`` subgradient steps.

    ``costs`` is (sites, candidates); ``forced`` candidates are already open
    (their ``open_cost`` is part of ``base``); at most ``slots`` others may
    open.
    """
    q, u = costs.shape[1], costs.shape[0]
    fits = demand[None, :] <= cap[:, None] + TOL
    cost_t = costs.T
    safe_demand = demand[None, :]
    best = None
    step_scale = 2.0
    stall = 0
    free_idx = np.flatnonzero(~forced)
    lam = prices.copy()

    for _ in range(max(1, iters)):
        reduced = cost_t - lam[None, :]
        valid = (reduced < 0) & fits
        ratio = np.where(valid, reduced / safe_demand, np.inf)
        order = np.argsort(ratio, axis=1, kind="stable")
        red_sorted = np.take_along_axis(np.where(valid, reduced, 0.0), order, axis=1)
        dem_sorted = np.take_along_axis(np.where(valid, safe_demand, 0.0), order, axis=1)
        before = np.cumsum(dem_sorted, axis=1) - dem_sorted
        room = cap[:, None] - before
        frac = np.where(dem_sorted > 0, np.clip(room / np.where(dem_sorted > 0, dem_sorted, 1.0), 0.0, 1.0), 0.0)
        knapsack = (red_sorted * frac).sum(axis=1)
        value = open_cost + knapsack

        selected = forced.copy()
        if slots > 0 and free_idx.size:
            attractive = free_idx[value[free_idx] < 0]
            if attractive.size > slots:
                attractive = attractive[np.argsort(value[attractive], kind="stable")[:slots]]
            selected[attractive] = True
        bound = base + lam.sum() + value[selected].sum()

        flow = np.zeros((q, u))
        np.put_along_axis(flow, order, frac, axis=1)
        cover = flow[selected].sum(axis=0)
        grad = 1.0 - cover

        if best is None or bound > best.bound:
            integral = bool(np.all((flow < TOL) | (flow > 1 - TOL)) and np.all(np.abs(grad) < TOL))
            best = _Relaxation(bound, lam.copy(), selected, flow, integral)
            stall = 0
        else:
            stall += 1
            if stall >= 4:
                step_scale *= 0.5
                stall = 0
        if best.integral or bound >= upper - TOL:
            break
        norm = float(grad @ grad)
        if norm < TOL or step_scale < 1e-4:
            break
        target = upper if np.isfinite(upper) else bound + max(1.0, 0.05 * abs(bound))
        lam = lam + step_scale * (target - bound) / norm * grad
    return best


def _regret_greedy(costs, demand, cap):
    n, q = costs.shape
    residual = cap.copy()
    if q > 1:
        two = np.partition(costs, 1, axis=1)
        regret = two[:, 1] - two[:, 0]
    else:
        regret = np.zeros(n)
    columns = np.full(n, -1)
    for i in np.lexsort((np.arange(n), -demand, -regret)):
        ok = demand[i] <= residual + TOL
        if not ok.any():
            return None
        col = int(np.argmin(np.where(ok, costs[i], np.inf)))
        residual[col] -= demand[i]
        columns[i] = col
    return columns


def _best_step(costs, demand, cap, columns, improve):
    """One move or swap of sites between columns.

    With ``improve`` the step must keep every column within capacity and
    lower the cost; otherwise it must shrink the overload of an overfull
    column without overfilling another, at the least cost per unit relieved.
    Returns ``(sites, new_columns)`` or ``None``.
    """
    n, q = costs.shape
    rows = np.arange(n)
    load = np.bincount(columns, weights=demand, minlength=q)
    over = load - cap
    room = cap - load
    current = costs[rows, columns]
    delta = costs - current[:, None]  # moving site i to column j
    fits = demand[:, None] <= room[None, :] + TOL
    fits[rows, columns] = False

    if improve:
        move_score = np.where(fits, delta, np.inf)
    else:
        source_over = over[columns]
        relief = np.minimum(demand, source_over)
        movable = (source_over > TOL)[:, None] & fits
        move_score = np.where(movable, delta / np.maximum(relief, TOL)[:, None], np.inf)
    i, j = np.unravel_index(np.argmin(move_score), move_score.shape)
    best_move = move_score[i, j]
    if improve and best_move < -TOL:
        return (int(i),), (int(j),)
    if not improve and np.isfinite(best_move):
        return (int(i),), (int(j),)

    # Swap site a (column ca) with site b (column cb).
    ca, cb = columns[:, None], columns[None, :]
    gain = demand[:, None] - demand[None, :]  # load shift from ca to cb
    new_b = load[cb] + gain
    new_a = load[ca] - gain
    delta_swap = costs[rows[:, None], cb] + costs[rows[None, :], ca] - current[:, None] - current[None, :]
    differ = ca != cb
    if improve:
        ok = differ & (new_a <= cap[ca] + TOL) & (new_b <= cap[cb] + TOL)
        score = np.where(ok, delta_swap, np.inf)
        a, b = np.unravel_index(np.argmin(score), score.shape)
        if score[a, b] < -TOL:
            return (int(a), int(b)), (int(columns[b]), int(columns[a]))
        return None
    src_over = over[ca]
    ok = differ & (src_over > TOL) & (gain > TOL) & (new_b <= cap[cb] + TOL)
    relief = np.minimum(gain, src_over)
    score = np.where(ok, delta_swap / np.maximum(relief, TOL), np.inf)
    a, b = np.unravel_index(np.argmin(score), score.shape)
    if not np.isfinite(score[a, b]):
        return None
    return (int(a), int(b)), (int(columns[b]), int(columns[a]))


def _pack(costs, demand, cap, max_steps=None):
    """Capacity-feasible, locally improved assignment of every site to a column, or None."""
    n = costs.shape[0]
    max_steps = max_steps or 20 * n
    columns = _regret_greedy(costs, demand, cap)
    if columns is None:
        columns = np.argmin(costs, axis=1)
        for _ in range(max_steps):
            load = np.bincount(columns, weights=demand, minlength=cap.size)
            if np.all(load <= cap + TOL):
                break
            step = _best_step(costs, demand, cap, columns, improve=False)
            if step is None:
                return None
            columns[list(step[0])] = step[1]
        else:
            return None
    for _ in range(max_steps):
        step = _best_step(costs, demand, cap, columns, improve=True)
        if step is None:
            break
        columns[list(step[0])] = step[1]
    return columns


def _packable(demand, residual) -> bool:
    """False when the sites provably cannot be packed into the residual capacities.

    A column can hold at most as many sites as its smallest ones that fit, so
    its usable room is capped by the sum of that many of the largest sites.
    """
    ascending = np.sort(demand)
    prefix = np.cumsum(ascending)
    count = np.searchsorted(prefix, residual + TOL, side="right")
    largest = np.concatenate([[0.0], np.cumsum(ascending[::-1])])
    usable = np.minimum(residual, largest[count])
    return float(usable.sum()) >= float(prefix[-1]) - TOL


class _Search:
    def __init__(self, instance: ProblemInstance, limits: SolveLimits, incumbent: Solution | None):
        self.instance = instance
        self.limits = limits
        self.start = time.perf_counter()
        self.nodes = 0
        self.demand = np.asarray(instance.demand)
        self.cap = np.asarray(instance.capacity)
        self.costs = np.asarray(instance.assignment_costs)
        self.open_cost = instance.alpha * np.asarray(instance.server_costs)
        self.budget = instance.budget
        self.total_demand = float(self.demand.sum())
        m = instance.n_candidates
        f = np.asarray(instance.server_costs)
        with np.errstate(divide="ignore"):
            ratio = np.where(f > 0, self.cap / np.where(f > 0, f, 1.0), np.inf)
        self.order = np.lexsort((np.arange(m), -ratio))
        self.best: Solution | None = None
        if incumbent is not None:
            self.offer(incumbent)

    @property
    def upper(self) -> float:
        return self.best.objective if self.best is not None else np.inf

    def offer(self, solution: Solution) -> None:
        if self.best is None or solution.objective < self.best.objective - TOL:
            self.best = solution
        elif abs(solution.objective - self.best.objective) <= TOL and solution.sort_key() < self.best.sort_key():
            self.best = solution

    def tick(self) -> None:
        self.nodes += 1
        lim = self.limits
        if lim.node_limit and self.nodes > lim.node_limit:
            raise _LimitReached
        if lim.time_limit and time.perf_counter() - self.start > lim.time_limit:
            raise _LimitReached

    def run(self):
        n = self.instance.n_sites
        cheapest = self.costs.min(axis=1)
        root = ("y", 0, (), cheapest.copy(), -np.inf)
        stack = [root]
        self.root_bound = -np.inf
        try:
            while stack:
                node = stack[-1]
                if node[-1] >= self.upper - TOL:
                    stack.pop()
                    continue
                self.tick()
                stack.pop()
                if node[0] == "y":
                    children = self.expand_placement(*node[1:])
                else:
                    children = self.expand_assignment(*node[1:])
                stack.extend(reversed(children))
        except _LimitReached:
            pending = [node[-1] for node in stack]
            bound = min([self.upper, *pending]) if pending else self.upper
            return True, max(bound, self.root_bound)
        return False, self.upper

    # Placement phase ---------------------------------------------------

    def expand_placement(self, k, opened, prices, parent_bound):
        m = self.instance.n_candidates
        slots = self.budget - len(opened)
        if slots == 0 or k == m:
            n = self.instance.n_sites
            committed = float(self.open_cost[list(opened)].sum())
            self._repair(np.array(opened, dtype=int))
            start = ("x", opened, np.full(n, -1), self.cap.copy(), committed, prices, parent_bound)
            return [start]

        free = self.order[k:]
        open_idx = np.array(opened, dtype=int)
        top = np.sort(self.cap[free])[::-1][:slots].sum()
        if self.cap[open_idx].sum() + top < self.total_demand - TOL:
            return []
        avail = np.concatenate([open_idx, free])
        if np.any(self.demand > self.cap[avail].max() + TOL):
            return []

        forced = np.zeros(avail.size, dtype=bool)
        forced[: open_idx.size] = True
        open_cost = np.where(forced, 0.0, self.open_cost[avail])
        base = float(self.open_cost[open_idx].sum())
        iters = 200 if k == 0 else 30
        relax = _lagrangian(
            self.costs[:, avail], self.demand, self.cap[avail], open_cost, forced,
            slots, base, prices, self.upper, iters,
        )
        if k == 0:
            self.root_bound = relax.bound
        if relax.bound >= self.upper - TOL:
            return []
        if relax.integral:
            self.offer(self._from_flow(avail, relax))
            return []
        self._repair(avail[relax.selected])
        if relax.bound >= self.upper - TOL:
            return []

        j = int(self.order[k])
        pos = open_idx.size  # position of j within avail
        with_j = ("y", k + 1, opened + (j,), relax.prices, relax.bound)
        without_j = ("y", k + 1, opened, relax.prices, relax.bound)
        if relax.selected[pos]:
            return [with_j, without_j]
        return [without_j, with_j]

    def _from_flow(self, avail, relax) -> Solution:
        flow = relax.flow[relax.selected]
        chosen = avail[relax.selected]
        assignment = chosen[np.argmax(flow, axis=0)]
        return evaluate(self.instance, chosen.tolist(), assignment.tolist())

    def _repair(self, chosen) -> None:
        """Heuristic assignment onto the relaxation's open set, as an incumbent."""
        if chosen.size == 0:
            return
        columns = _pack(self.costs[:, chosen], self.demand, self.cap[chosen])
        if columns is None:
            return
        assignment = chosen[columns]
        used = sorted(set(assignment.tolist()))
        self.offer(evaluate(self.instance, used, assignment.tolist()))

    # Assignment phase --------------------------------------------------

    def expand_assignment(self, opened, assignment, residual, committed, prices, parent_bound):
        open_idx = np.array(opened, dtype=int)
        todo = np.flatnonzero(assignment < 0)
        if todo.size == 0:
            self.offer(evaluate(self.instance, opened, assignment.tolist()))
            return []
        if open_idx.size == 0:
            return []
        dem = self.demand[todo]
        res = residual[open_idx]
        fits = dem[:, None] <= res[None, :] + TOL
        if not fits.any(axis=1).all() or not _packable(dem, res):
            return []
        costs = self.costs[np.ix_(todo, open_idx)]
        masked = np.where(fits, costs, np.inf)
        choice = np.argmin(masked, axis=1)
        cheap = committed + float(masked[np.arange(todo.size), choice].sum())
        if cheap >= self.upper - TOL:
            return []
        load = np.bincount(choice, weights=dem, minlength=open_idx.size)
        if np.all(load <= res + TOL):
            done = assignment.copy()
            done[todo] = open_idx[choice]
            self.offer(evaluate(self.instance, opened, done.tolist()))
            return []

        relax = _lagrangian(
            costs, dem, res, np.zeros(open_idx.size), np.ones(open_idx.size, dtype=bool),
            0, committed, prices[todo], self.upper, 30,
        )
        if relax.bound >= self.upper - TOL:
            return []
        new_prices = prices.copy()
        new_prices[todo] = relax.prices
        if relax.integral:
            done = assignment.copy()
            done[todo] = open_idx[np.argmax(relax.flow, axis=0)]
            self.offer(evaluate(self.instance, opened, done.tolist()))
            return []

        # Branch on the heaviest site the relaxation fails to cover exactly.
        cover = relax.flow.sum(axis=0)
        unsettled = np.abs(cover - 1.0) > TOL
        pool = np.flatnonzero(unsettled) if unsettled.any() else np.arange(todo.size)
        pick = pool[np.lexsort((todo[pool], -dem[pool]))[0]]
        site = int(todo[pick])
        cols = np.flatnonzero(fits[pick])
        cols = cols[np.lexsort((cols, costs[pick, cols]))]
        children = []
        for col in cols:
            nxt = assignment.copy()
            nxt[site] = open_idx[col]
            res_next = residual.copy()
            res_next[open_idx[col]] -= self.demand[site]
            children.append(
                ("x", opened, nxt, res_next, committed + float(costs[pick, col]), new_prices, max(cheap, relax.bound))
            )
        return children


def solve_exact(
    instance: ProblemInstance, limits: SolveLimits | None = None, *, warm_start: bool = True
) -> SolveOutcome:
    """Provably optimal placement and assignment.

    With ``warm_start`` the greedy solution seeds the incumbent.
    """
    limits = limits or SolveLimits()
    start = time.perf_counter()
    demand = np.asarray(instance.demand)
    cap = np.sort(np.asarray(instance.capacity))[::-1]
    if cap[: instance.budget].sum() < demand.sum() - TOL or demand.max() > cap[0] + TOL:
        return SolveOutcome(SolveStatus.INFEASIBLE, None, 0, time.perf_counter() - start)

    incumbent = None
    if warm_start:
        greedy = solve_caga(instance)
        if greedy.status is GreedyStatus.SUCCESS:
            incumbent = greedy.solution
    search = _Search(instance, limits, incumbent)
    hit_limit, bound = search.run()
    elapsed = time.perf_counter() - start
    if hit_limit:
        return SolveOutcome(SolveStatus.LIMIT_REACHED, search.best, search.nodes, elapsed, bound)
    if search.best is None:
        return SolveOutcome(SolveStatus.INFEASIBLE, None, search.nodes, elapsed)
    return SolveOutcome(SolveStatus.OPTIMAL, search.best, search.nodes, elapsed, search.best.objective)
