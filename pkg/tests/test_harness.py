import dataclasses
import json

import pytest

from vranpap.exact import SolveLimits
from vranpap.harness import (
    COLUMNS,
    SweepConfig,
    SweepMode,
    SweepResultTable,
    SweepRow,
    emit_report,
    read_csv,
    run_sweep,
    series,
    write_csv,
)

QUICK = SolveLimits(time_limit=30.0, node_limit=3000)


def _by_sites(**kw):
    base = dict(mode="by_sites", site_counts=[5, 10], seeds=[1, 2], limits=QUICK)
    base.update(kw)
    return SweepConfig(**base)


def _strip_time(table):
    return [r.as_tuple(with_time=False) for r in table.rows]


def test_row_count_and_order():
    table = run_sweep(_by_sites())
    assert len(table) == 8
    keys = [(r.solver, r.site_count, r.seed) for r in table.rows]
    assert keys == [(s, n, seed) for s in ("exact", "caga") for n in (5, 10) for seed in (1, 2)]
    assert table.mode is SweepMode.BY_SITES


def test_budget_is_clamped_to_site_count():
    table = run_sweep(_by_sites(site_counts=[5], seeds=[0], fixed_budget=15))
    assert {r.budget for r in table.rows} == {5}


def test_rerun_is_identical_apart_from_time():
    config = _by_sites(site_counts=[8, 12], seeds=[3, 4])
    assert _strip_time(run_sweep(config)) == _strip_time(run_sweep(config))


def test_workers_do_not_change_rows():
    config = _by_sites(site_counts=[6, 9], seeds=[0, 1])
    serial = run_sweep(config)
    parallel = run_sweep(dataclasses.replace(config, workers=2))
    assert _strip_time(serial) == _strip_time(parallel)


def test_budget_sweep_starts_infeasible():
    config = SweepConfig(mode="by_budget", budgets=[1, 2, 6], fixed_sites=25, seeds=[0, 1], limits=QUICK)
    table = run_sweep(config)
    assert table.mode is SweepMode.BY_BUDGET
    for row in table.rows:
        if row.budget <= 2:
            assert not row.feasible
            assert (row.total_cost, row.bbus_placed, row.utilization) == (0, 0, 0)
    assert any(r.feasible for r in table.select("exact", budget=6))


def test_large_cells_skip_exact_unless_forced():
    config = _by_sites(site_counts=[31], seeds=[0], exact_site_limit=30)
    (exact,) = run_sweep(config).select("exact")
    assert exact.status == "skipped"


def test_csv_round_trip(tmp_path):
    table = run_sweep(_by_sites())
    path = write_csv(table, tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 9
    assert read_csv(path) == table


def test_read_csv_rejects_wrong_header(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(bad)


def test_report_writes_csv_and_plots(tmp_path):
    sites = emit_report(run_sweep(_by_sites()), tmp_path / "sites")
    assert sorted(p.name for p in sites) == sorted(
        ["results.csv", "cost_vs_sites.png", "bbus_vs_sites.png", "utilization_vs_sites.png", "time_vs_sites.png"]
    )
    budget = run_sweep(SweepConfig(mode="by_budget", budgets=[1, 2], fixed_sites=6, seeds=[0], limits=QUICK))
    names = sorted(p.name for p in emit_report(budget, tmp_path / "budget"))
    assert names == ["cost_vs_budget.png", "deviation_vs_budget.png", "results.csv"]
    for p in sites + emit_report(budget, tmp_path / "budget"):
        assert p.stat().st_size > 0


def test_all_infeasible_table_still_plots(tmp_path):
    rows = tuple(
        SweepRow(s, n, 1, 0, 0.0, 0, 0.0, 0.01, 0.0, "infeasible" if s == "exact" else "failed")
        for s in ("exact", "caga") for n in (5, 10)
    )
    paths = emit_report(SweepResultTable(rows), tmp_path)
    assert len(paths) == 5
    assert series(SweepResultTable(rows), "exact", "total_cost") == ([5, 10], [0.0, 0.0])


def test_report_without_plots(tmp_path):
    paths = emit_report(run_sweep(_by_sites(site_counts=[5], seeds=[0])), tmp_path, plots=False)
    assert [p.name for p in paths] == ["results.csv"]


def test_empty_table_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_report(SweepResultTable(()), tmp_path)


def test_config_json_round_trip():
    config = _by_sites(solvers=["caga"], alpha=2.0)
    assert SweepConfig.from_dict(json.loads(json.dumps(config.to_dict()))) == config


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"site_counts": []}, None),
        ({"seeds": []}, None),
        ({"solvers": ["cplex"]}, None),
        ({"seeds": ["a"]}, "seeds"),
        ({"mode": "sideways"}, "mode"),
        ({"generator": {"grid_size": "big"}}, "generator.grid_size"),
        ({"limits": {"time_limit": -1}}, "limits"),
        ({"colour": 1}, "colour"),
    ],
)
def test_invalid_configs(doc, field):
    with pytest.raises(ValueError) as info:
        SweepConfig.from_dict(doc)
    if field:
        assert field in str(info.value)


def test_defaults_follow_the_experiment_design():
    config = SweepConfig()
    assert config.site_counts == (5, 10, 15, 20, 25, 30, 35, 40)
    assert config.fixed_budget == 15 and config.fixed_sites == 25
    assert config.budgets == tuple(range(1, 16))
    assert len(config.seeds) == 10 and config.solvers == ("exact", "caga")
    assert config.limits.time_limit == 60
