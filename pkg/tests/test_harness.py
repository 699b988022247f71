import json
import os

import numpy as np
import pytest

from procura.harness import (
    ExperimentConfig,
    curve_csv,
    emit_csv,
    emit_json,
    read_summary,
    run_experiment,
)

QUAD = {"dimension": 1, "terms": [{"coef": 1.0, "exponents": [2.0]}]}
TWO_RES = {
    "dimension": 2,
    "terms": [
        {"coef": 1.0, "exponents": [4.0, 0.0]},
        {"coef": 1.0, "exponents": [2.0, 0.0]},
        {"coef": 2.0, "exponents": [1.0, 1.0]},
        {"coef": 1.0, "exponents": [0.0, 2.0]},
    ],
    "basis": [[0], [1, 2, 3]],
}


def scalar_config(T=100, strategies=("identity", "poly"), **extra):
    data = {
        "cost": QUAD,
        "strategies": list(strategies),
        "instance": {"generator": {"kind": "scalar", "T": T}},
        **extra,
    }
    return ExperimentConfig.from_dict(data)


def test_scalar_experiment():
    report = run_experiment(scalar_config())
    ident, poly = report.result("identity"), report.result("poly")
    assert ident.Pstar == pytest.approx(5050, abs=0.5)
    assert ident.ratio == pytest.approx(100 / 5050, abs=1e-3)
    assert poly.ratio == pytest.approx(2550 / 5050, abs=1e-3)
    assert poly.bound == pytest.approx(0.25, rel=1e-9)
    # the identity surrogate has no finite ratio bound, so its check is vacuous
    assert ident.bound == 0.0
    assert report.all_passed


def test_pass_flag_consistent_with_numbers():
    report = run_experiment(scalar_config(T=6))
    for r in report.results:
        assert r.passed == (r.ratio >= r.bound - 1e-6)


def test_two_resource_experiment_ordering():
    data = {
        "cost": TWO_RES,
        "strategies": ["identity", "poly", "chan", {"name": "quasiconvex", "epsilon": 0.05}],
        "instance": {"generator": {"kind": "gradient", "T": 6}},
        "grid_step": 0.25,
    }
    report = run_experiment(ExperimentConfig.from_dict(data))
    assert report.all_passed, [r.error for r in report.results]
    ident = report.result("identity").Ps
    assert ident < report.result("poly").Ps
    assert ident < report.result("quasiconvex").Ps
    for r in report.results:
        assert len(r.curve) == 6


def test_sequential_experiment_records_variant():
    cfg = scalar_config(T=4, strategies=("poly",), engine={"kind": "sequential", "offset": 1.0})
    report = run_experiment(cfg)
    assert report.variant.value == "seq1"
    assert report.result("poly").Ps == pytest.approx(8.0)


def test_config_validation():
    with pytest.raises(ValueError, match="at least one strategy"):
        scalar_config(strategies=())
    with pytest.raises(ValueError):
        scalar_config(strategies=("identity", "identity"))
    with pytest.raises(ValueError):
        scalar_config(strategies=("magic",))
    with pytest.raises(ValueError):
        scalar_config(engine={"kind": "batch"})


def test_failing_strategy_is_isolated():
    # a linear cost has no quadratic part for the scaling designs
    data = {
        "cost": {"dimension": 1, "terms": [{"coef": 1.0, "exponents": [1.0]}, {"coef": 1.0, "exponents": [2.0]}]},
        "strategies": ["identity", "chan"],
        "instance": {"generator": {"kind": "scalar", "T": 4}},
    }
    report = run_experiment(ExperimentConfig.from_dict(data))
    assert report.result("identity").error is None
    assert report.result("chan").error is not None
    assert not report.result("chan").passed
    assert not report.all_passed


def test_config_from_files(tmp_path):
    (tmp_path / "cost.json").write_text(json.dumps(QUAD))
    from procura.instances import gen_adversarial_scalar, save_instance

    save_instance(gen_adversarial_scalar(4), tmp_path / "inst.json")
    cfg = ExperimentConfig.from_dict(
        {"cost_file": "cost.json", "strategies": ["poly"], "instance": {"file": "inst.json"}}, tmp_path
    )
    assert cfg.build_instance().horizon == 4


def test_emit_csv_rows(tmp_path):
    report = run_experiment(scalar_config(T=4))
    curve, summary = emit_csv(report, tmp_path)
    assert len(curve.read_text().splitlines()) == 1 + 8
    assert len(summary.read_text().splitlines()) == 1 + 2
    assert curve.read_text().splitlines()[0] == "t,strategy,cumulative_objective"
    assert summary.read_text().splitlines()[0] == "strategy,Ps,Pstar,ratio,bound,pass"
    assert b"\r" not in curve.read_bytes()


def test_emit_is_deterministic(tmp_path):
    for sub in ("a", "b"):
        emit_csv(run_experiment(scalar_config(T=10)), tmp_path / sub)
    for name in ("curve.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_summary_recomputes_report(tmp_path):
    report = run_experiment(scalar_config(T=10))
    _, summary = emit_csv(report, tmp_path)
    for row, r in zip(read_summary(summary), report.results):
        assert row["Ps"] == r.Ps and row["Pstar"] == r.Pstar and row["bound"] == r.bound
        assert row["ratio"] == row["Ps"] / row["Pstar"]
        assert row["pass"] == (row["ratio"] >= row["bound"] - 1e-6)
    lines = curve_csv(report).splitlines()[1:]
    last = [ln for ln in lines if ln.startswith("10,")]
    assert [float(ln.split(",")[2]) for ln in last] == [r.Ps for r in report.results]


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_directory_leaves_nothing(tmp_path):
    report = run_experiment(scalar_config(T=4))
    target = tmp_path / "locked"
    target.mkdir()
    target.chmod(0o500)
    try:
        with pytest.raises(OSError):
            emit_csv(report, target)
        assert list(target.iterdir()) == []
    finally:
        target.chmod(0o700)


def test_failed_write_leaves_no_partial_file(tmp_path, monkeypatch):
    report = run_experiment(scalar_config(T=4))
    import procura.harness as harness

    def boom(report):
        raise RuntimeError("disk full")

    monkeypatch.setattr(harness, "summary_csv", boom)
    with pytest.raises(RuntimeError):
        emit_csv(report, tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["curve.csv"]


def test_target_path_is_a_file(tmp_path):
    report = run_experiment(scalar_config(T=4))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_csv(report, blocker)
    assert blocker.read_text() == "x"


def test_emit_json(tmp_path):
    report = run_experiment(scalar_config(T=4))
    data = json.loads(emit_json(report, tmp_path).read_text())
    assert data["all_passed"] is True
    assert [s["strategy"] for s in data["strategies"]] == ["identity", "poly"]
    assert np.isfinite(data["strategies"][1]["Ps"])
