"""Seeded experiment sweeps over network size or server budget."""

from __future__ import annotations

import csv
import enum
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .exact import SolveLimits, solve_exact
from .greedy import solve_caga
from .metrics import summarize
from .topology import GeneratorConfig, generate_instance

logger = logging.getLogger(__name__)

SOLVERS = ("exact", "caga")
COLUMNS = (
    "solver", "site_count", "budget", "seed", "total_cost", "bbus_placed",
    "utilization", "wall_time_s", "latency_deviation_s", "status",
)


class SweepMode(str, enum.Enum):
    BY_SITES = "by_sites"
    BY_BUDGET = "by_budget"


@dataclass(frozen=True)
class SweepConfig:
    mode: SweepMode = SweepMode.BY_SITES
    site_counts: tuple[int, ...] = (5, 10, 15, 20, 25, 30, 35, 40)
    budgets: tuple[int, ...] = tuple(range(1, 16))
    fixed_budget: int = 15
    fixed_sites: int = 25
    seeds: tuple[int, ...] = tuple(range(10))
    solvers: tuple[str, ...] = SOLVERS
    generator: GeneratorConfig = field(default_factory=lambda: GeneratorConfig(site_count=1))
    # The node cap normally binds before the clock, which keeps reruns identical.
    limits: SolveLimits = field(default_factory=lambda: SolveLimits(time_limit=60.0, node_limit=40_000))
    alpha: float = 1.0
    beta: float = 1.0
    exact_site_limit: int = 30  # larger cells run the greedy solver only
    force_exact: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", SweepMode(self.mode))
        for name in ("site_counts", "budgets", "seeds", "solvers"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.axis:
            raise ValueError(f"{self.mode.value} sweep needs a non-empty axis")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers {sorted(unknown)}; choose from {SOLVERS}")
        if any(v < 1 for v in self.axis):
            raise ValueError("axis values must be >= 1")

    @property
    def axis(self) -> tuple[int, ...]:
        return self.site_counts if self.mode is SweepMode.BY_SITES else self.budgets

    def cell(self, value: int) -> tuple[int, int]:
        """(site count, effective budget) for one axis value."""
        if self.mode is SweepMode.BY_SITES:
            return value, min(self.fixed_budget, value)
        return self.fixed_sites, min(value, self.fixed_sites)

    def to_dict(self) -> dict[str, Any]:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["mode"] = self.mode.value
        doc["generator"] = self.generator.to_dict()
        doc["limits"] = {"time_limit": self.limits.time_limit, "node_limit": self.limits.node_limit}
        for name in ("site_counts", "budgets", "seeds", "solvers"):
            doc[name] = list(doc[name])
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown sweep fields: {sorted(unknown)}")
        kwargs = dict(doc)
        for name in ("site_counts", "budgets", "seeds"):
            if name in kwargs:
                values = kwargs[name]
                if not isinstance(values, list) or not all(_is_int(v) for v in values):
                    raise ValueError(f"{name}: expected a list of integers, got {values!r}")
        for name in ("fixed_budget", "fixed_sites", "exact_site_limit", "workers"):
            if name in kwargs and not _is_int(kwargs[name]):
                raise ValueError(f"{name}: expected an integer, got {kwargs[name]!r}")
        if "solvers" in kwargs and not isinstance(kwargs["solvers"], list):
            raise ValueError(f"solvers: expected a list, got {kwargs['solvers']!r}")
        if "mode" in kwargs and kwargs["mode"] not in [m.value for m in SweepMode]:
            raise ValueError(f"mode: expected one of {[m.value for m in SweepMode]}, got {kwargs['mode']!r}")
        gen = kwargs.pop("generator", {})
        if not isinstance(gen, Mapping):
            raise ValueError("generator: expected an object")
        gen = dict(gen)
        gen.setdefault("site_count", 1)
        try:
            kwargs["generator"] = GeneratorConfig.from_dict(gen)
        except ValueError as exc:
            raise ValueError(f"generator.{exc}") from None
        if "limits" in kwargs:
            lim = kwargs["limits"]
            if not isinstance(lim, Mapping) or set(lim) - {"time_limit", "node_limit"}:
                raise ValueError(f"limits: expected {{time_limit, node_limit}}, got {lim!r}")
            try:
                kwargs["limits"] = SolveLimits(**lim)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"limits: {exc}") from None
        return cls(**kwargs)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class SweepRow:
    solver: str
    site_count: int
    budget: int
    seed: int
    total_cost: float
    bbus_placed: int
    utilization: float
    wall_time_s: float
    latency_deviation_s: float
    status: str

    @property
    def feasible(self) -> bool:
        return self.status in ("optimal", "limit_reached", "success") and self.bbus_placed > 0

    def as_tuple(self, with_time: bool = True) -> tuple:
        values = tuple(getattr(self, c) for c in COLUMNS)
        if not with_time:
            values = values[:7] + values[8:]
        return values


@dataclass(frozen=True)
class SweepResultTable:
    rows: tuple[SweepRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def mode(self) -> SweepMode:
        sites = {r.site_count for r in self.rows}
        budgets = {r.budget for r in self.rows}
        if len(sites) == 1 and len(budgets) > 1:
            return SweepMode.BY_BUDGET
        return SweepMode.BY_SITES

    def select(self, solver: str | None = None, **match) -> list[SweepRow]:
        return [
            r for r in self.rows
            if (solver is None or r.solver == solver)
            and all(getattr(r, k) == v for k, v in match.items())
        ]


def _run_cell(config: SweepConfig, value: int, seed: int) -> list[SweepRow]:
    sites, budget = config.cell(value)
    gen = replace(config.generator, site_count=sites, rng_seed=seed)
    instance = generate_instance(gen, budget, config.alpha, config.beta)
    rows = []
    for solver in config.solvers:
        if solver == "exact" and sites > config.exact_site_limit and not config.force_exact:
            rows.append(SweepRow(solver, sites, budget, seed, 0.0, 0, 0.0, 0.0, 0.0, "skipped"))
            continue
        start = time.perf_counter()
        try:
            if solver == "exact":
                outcome = solve_exact(instance, config.limits)
            else:
                outcome = solve_caga(instance)
        except Exception as exc:  # recorded, never fatal for the sweep
            logger.exception("solver %s failed on sites=%d budget=%d seed=%d", solver, sites, budget, seed)
            rows.append(SweepRow(solver, sites, budget, seed, 0.0, 0, 0.0,
                                 time.perf_counter() - start, 0.0, f"error:{type(exc).__name__}"))
            continue
        elapsed = time.perf_counter() - start
        m = summarize(instance, outcome, elapsed)
        rows.append(SweepRow(
            solver, sites, budget, seed, m.total_cost, m.bbus_placed, m.utilization,
            m.wall_time, m.latency_deviation, outcome.status.value,
        ))
        logger.debug("%s sites=%d budget=%d seed=%d -> %s", solver, sites, budget, seed, outcome.status.value)
    return rows


def _run_cell_args(args):
    return _run_cell(*args)


def run_sweep(config: SweepConfig) -> SweepResultTable:
    """Generate one instance per (axis value, seed) and run every solver on it.

    Rows come back ordered by solver, then axis value, then seed, whatever the
    worker count.
    """
    jobs = [(config, value, seed) for value in config.axis for seed in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_cell_args, jobs))
    else:
        results = [_run_cell(*job) for job in jobs]
    by_solver = {s: [] for s in config.solvers}
    for cell_rows in results:
        for row in cell_rows:
            by_solver[row.solver].append(row)
    return SweepResultTable(tuple(row for s in config.solvers for row in by_solver[s]))


# Reporting ----------------------------------------------------------------


def write_csv(table: SweepResultTable, path: Path | str) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in table.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row.as_tuple()])
    return path


def read_csv(path: Path | str) -> SweepResultTable:
    types = {f.name: f.type for f in fields(SweepRow)}
    casts = {"int": int, "float": float, "str": str}
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for rec in reader:
            rows.append(SweepRow(**{k: casts[types[k]](rec[k]) for k in COLUMNS}))
    return SweepResultTable(tuple(rows))


def series(table: SweepResultTable, solver: str, attr: str) -> tuple[list[int], list[float]]:
    """Per-axis-value mean of ``attr`` over seeds (skipped cells left out)."""
    key = "site_count" if table.mode is SweepMode.BY_SITES else "budget"
    groups: dict[int, list[float]] = {}
    for row in table.select(solver):
        if row.status == "skipped":
            continue
        groups.setdefault(getattr(row, key), []).append(float(getattr(row, attr)))
    xs = sorted(groups)
    return xs, [sum(groups[x]) / len(groups[x]) for x in xs]


_FIGURES = {
    SweepMode.BY_SITES: (
        ("cost_vs_sites", "total_cost", "Placement and assignment cost", False),
        ("bbus_vs_sites", "bbus_placed", "BBU servers placed", False),
        ("utilization_vs_sites", "utilization", "Average resource utilization", False),
        ("time_vs_sites", "wall_time_s", "Computation time (s)", True),
    ),
    SweepMode.BY_BUDGET: (
        ("cost_vs_budget", "total_cost", "Placement and assignment cost", False),
        ("deviation_vs_budget", "latency_deviation_s", "Mean latency deviation (s)", False),
    ),
}


def emit_report(table: SweepResultTable, out_dir: Path | str, plots: bool = True) -> list[Path]:
    """Write ``results.csv`` and, optionally, one PNG per figure."""
    if not len(table):
        raise ValueError("empty result table")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_csv(table, out / "results.csv")]
    if plots:
        written += _plot(table, out)
    return written


def _plot(table: SweepResultTable, out: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    mode = table.mode
    xlabel = "Number of RRH sites" if mode is SweepMode.BY_SITES else "Budget (max BBU servers)"
    solvers = list(dict.fromkeys(r.solver for r in table.rows))
    paths = []
    for name, attr, ylabel, log in _FIGURES[mode]:
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for solver in solvers:
            xs, ys = series(table, solver, attr)
            if xs:
                ax.plot(xs, ys, marker="o", label=solver)
        if log:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = out / f"{name}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
