"""Tests for tables.py"""

import pytest


def _config(**kw):
    from pbsp_sim.runconfig import RunConfig
    base = dict(d_list=(2,), n_list=(1, 2), eps_list=(0.2, 0.1), trials=20_000, seed=42)
    base.update(kw)
    return RunConfig("table", **base)


def _by_task(rows, task):
    return [r for r in rows if r["task"] == task]


# ─── Rows ────────────────────────────────────────────────────────────────────

def test_make_row_provenance_defaults():
    from pbsp_sim.tables import make_row
    assert make_row("x", formula=1.0)["provenance"] == "formula"
    assert make_row("x", formula=1.0, sampled=0.9)["provenance"] == "sampled"
    assert make_row("x", formula=1.0, sampled=0.9, dense=1.0)["provenance"] == "dense"
    assert make_row("x", verdict=False)["verdict"] == "fail"


def test_report_ok_and_failed():
    from pbsp_sim.tables import Report, make_row
    report = Report("t", [make_row("a", verdict=True), make_row("b", verdict="flag")])
    assert report.ok
    report.rows.append(make_row("c", verdict=False))
    assert [r["task"] for r in report.failed] == ["c"]


def test_evaluate_grid_keeps_point_order():
    from pbsp_sim.tables import evaluate_grid
    points = [(i,) for i in range(6)]
    rows = evaluate_grid(points, lambda i: [{"task": str(i)}], workers=3)
    assert [r["task"] for r in rows] == [str(i) for i in range(6)]


def test_qrac_dimension():
    from pbsp_sim.tables import qrac_dimension
    from pbsp_sim.common.errors import UsageError
    assert qrac_dimension(4) == 1
    assert qrac_dimension(8) == 2
    for bad in (2, 3, 6):
        with pytest.raises(UsageError):
            qrac_dimension(bad)


# ─── Tables ──────────────────────────────────────────────────────────────────

def test_pbsp_table_reference_row():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("pbsp", _config(n_list=(3,)))
    prob = _by_task(report.rows, "pbsp-prob")[0]
    assert prob["formula"] == pytest.approx(0.875)
    assert prob["dense"] == pytest.approx(0.875, abs=1e-10)
    assert prob["verdict"] == "pass"
    det = _by_task(report.rows, "pbsp-det")[0]
    assert det["dense"] == pytest.approx(0.875, abs=1e-10)
    assert report.ok


def test_pbsp_table_over_budget_uses_formula_and_sampling():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("pbsp", _config(d_list=(3,), n_list=(4,), dense_budget=1000))
    prob = _by_task(report.rows, "pbsp-prob")[0]
    assert prob["formula"] == pytest.approx(65 / 81)
    assert prob["dense"] is None
    assert prob["provenance"] == "sampled"


def test_pbt_table_rows():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("pbt", _config(n_list=(3,)))
    assert _by_task(report.rows, "pbt-prob")[0]["formula"] == pytest.approx(0.5)
    assert _by_task(report.rows, "pbt-det-from-prob")[0]["formula"] == pytest.approx(0.625)
    assert _by_task(report.rows, "pbsp-minus-pbt-prob")[0]["verdict"] == "pass"
    assert _by_task(report.rows, "pbt-det")[0]["dense"] is not None
    assert report.ok


def test_pbsp_table_bound_rows():
    import math
    from pbsp_sim.bounds import binary_entropy
    from pbsp_sim.tables import cmd_table
    report = cmd_table("pbsp", _config(n_list=(1, 3)))
    epr = _by_task(report.rows, "pbsp-epr-optimal")
    assert [r["formula"] for r in epr] == [pytest.approx(0.5), pytest.approx(0.875)]
    assert all(r["verdict"] == "pass" for r in epr)
    single, three = _by_task(report.rows, "pbsp-fidelity-bound")
    assert single["provenance"] == "vacuous-bound"
    assert single["verdict"] is None
    assert three["verdict"] == "pass"
    assert three["formula"] == pytest.approx(1 - binary_entropy(math.sqrt(0.125)), abs=1e-10)


def test_sampling_miss_is_flagged_not_failed():
    from pbsp_sim.tables import _agreement_verdict
    assert _agreement_verdict(0.875, 0.875, 0.875, 0.01) == "pass"
    assert _agreement_verdict(0.875, 0.875, 0.839, 0.0105) == "flag"
    assert _agreement_verdict(None, 0.875, 0.839, 0.0105) == "flag"
    assert _agreement_verdict(0.9, 0.875, 0.875, 0.01) == "fail"


def test_pbsp_table_ok_when_every_sample_misses(monkeypatch):
    from pbsp_sim import tables
    monkeypatch.setattr(tables, "within_interval", lambda *a, **kw: False)
    report = tables.cmd_table("pbsp", _config(n_list=(3,), trials=1000))
    assert _by_task(report.rows, "pbsp-det")[0]["verdict"] == "flag"
    assert report.ok


def test_pbt_table_bound_rows():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("pbt", _config(n_list=(1, 4)))
    small, large = _by_task(report.rows, "pbt-avg-fidelity")
    assert small["formula"] is None
    assert small["dense"] == pytest.approx(0.5, abs=1e-10)
    assert large["formula"] == pytest.approx(0.5)
    assert large["verdict"] == "pass"
    diamond = _by_task(report.rows, "pbt-diamond-error")
    assert diamond[1]["formula"] == pytest.approx(8.0)
    assert report.ok


def test_pbt_table_leaves_vacuous_bound_blank():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("pbt", _config(n_list=(2,), dense_budget=10))
    det = _by_task(report.rows, "pbt-det")[0]
    assert det["formula"] is None
    assert det["dense"] is None
    assert det["provenance"] == "vacuous-bound"


def test_uphp_table_rows():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("uphp", _config(d_list=(2, 3), eps_list=(0.2, 0.1)))
    assert len(_by_task(report.rows, "uphp-log2-m")) == 4
    assert len(_by_task(report.rows, "uphp-lower-log2")) == 4
    assert report.ok


def test_uphp_table_skips_lower_bound_at_half():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("uphp", _config(eps_list=(0.5,)))
    assert not _by_task(report.rows, "uphp-lower-log2")
    assert _by_task(report.rows, "upqp-upper-log2")


def test_qrac_table():
    from pbsp_sim.tables import cmd_table
    report = cmd_table("qrac", _config(d_list=(4,), eps_list=(0.2,)))
    guess = _by_task(report.rows, "qrac-guess")[0]
    assert guess["N"] == 13
    assert guess["formula"] == pytest.approx(0.98413, abs=1e-4)
    achieved = _by_task(report.rows, "qrac-nayak-achieved")[0]
    assert 0 < achieved["formula"] < 2
    assert achieved["verdict"] == "pass"
    assert report.ok


def test_qrac_table_rejects_bad_grid():
    from pbsp_sim.tables import cmd_table
    from pbsp_sim.common.errors import UsageError
    with pytest.raises(UsageError):
        cmd_table("qrac", _config(d_list=(3,)))
    with pytest.raises(UsageError):
        cmd_table("qrac", _config(d_list=(4,), eps_list=(0.3,)))


def test_unknown_table():
    from pbsp_sim.tables import cmd_table
    from pbsp_sim.common.errors import UsageError
    with pytest.raises(UsageError):
        cmd_table("bogus", _config())


def test_tables_are_reproducible_across_workers():
    from pbsp_sim.tables import cmd_table
    serial = cmd_table("pbsp", _config(workers=1)).render("csv")
    parallel = cmd_table("pbsp", _config(workers=2)).render("csv")
    assert serial == parallel


# ─── Sampling and plans ──────────────────────────────────────────────────────

def test_sample_report_rows():
    from pbsp_sim.tables import cmd_sample
    report = cmd_sample(_config(n_list=(2,)))
    tasks = [r["task"] for r in report.rows]
    assert tasks == ["pbsp-sample", "pbsp-sample:x=0", "pbsp-sample:x=1", "pbsp-sample:x=2"]
    assert all(r["sigma"] > 0 for r in report.rows)


def test_uphp_plan_report():
    from pbsp_sim.tables import uphp_plan_report
    report = uphp_plan_report(_config(d_list=(2,), eps_list=(0.1,)))
    assert report.rows[0]["N"] == 10
    assert report.rows[0]["formula"] == pytest.approx(20.0)
    assert report.ok


def test_qrac_demo_report():
    from pbsp_sim.tables import qrac_demo_report
    report = qrac_demo_report(1, 0.2, _config())
    assert [r["task"] for r in report.rows] == ["qrac-demo:x=0", "qrac-demo:x=1", "qrac-demo:log2-m"]
    assert report.rows[0]["dense"] is None
    assert report.ok
