import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pytest

from zoomforge.bounds import verdicts
from zoomforge.estimators import stopping_records
from zoomforge.estimators.trajectory import RECORD_FIELDS
from zoomforge.harness.analysis import BOUNDED_FACTOR, analyze, stability_summary
from zoomforge.harness.experiment import build_components, recorded_fields, run_closed_loop
from zoomforge.harness.persistence import RunWriter, read_csv, read_manifest, read_trajectory
from zoomforge.harness.report import collate, report_text
from zoomforge.harness.simulate import record_arrays
from zoomforge.harness.sweep import axis_path, run_sweep
from zoomforge.harness.workers import replication_blocks, run_blocks
from zoomforge.shared.errors import ConfigurationError, InputError, ReportError
from zoomforge.shared.models.reports import Estimate
from conftest import make_config


def full_run(config):
    """Simulate, analyse and write the manifest the way the simulate command does."""
    notes = []
    parts = build_components(config)
    writer = RunWriter(config.output)
    trajectories, _ = run_closed_loop(config, writer=writer, warnings=notes)
    summaries = analyze(config, parts, trajectories, writer, notes)
    writer.write_manifest(config.config_hash(), config.name, trajectories.seeds, notes)
    return trajectories, summaries


def run_files(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_replication_blocks_cover_every_index():
    blocks = replication_blocks(10, 3)
    assert [len(b) for b in blocks] == [4, 3, 3]
    assert sum(blocks, []) == list(range(10))
    assert replication_blocks(2, 8) == [[0], [1]]


def test_same_config_gives_identical_bytes(tmp_path):
    first = make_config(output=str(tmp_path / "a"))
    second = make_config(output=str(tmp_path / "b"))
    full_run(first)
    full_run(second)
    a, b = run_files(tmp_path / "a"), run_files(tmp_path / "b")
    assert a.keys() == b.keys()
    assert "trajectories/rep-0003.jsonl" in a
    assert a == b


def test_worker_count_does_not_change_the_trajectories(tmp_path):
    config = make_config(tmp_path, replications=6)
    inline = run_blocks(config)
    with ProcessPoolExecutor(max_workers=2) as pool:
        pooled = run_blocks(config.with_overrides(workers=2), pool)
    assert pooled.seeds == inline.seeds
    for name in ("x", "q", "qprime", "exponent", "delta"):
        assert np.array_equal(getattr(pooled, name), getattr(inline, name))


def test_equal_seeds_give_equal_trajectories(tmp_path):
    config = make_config(tmp_path, replications=2, seeds=[5, 5], channel={"kind": "erasure", "epsilon": 0.2})
    trajectories = run_blocks(config)
    assert np.array_equal(trajectories.x[0], trajectories.x[1])
    assert np.array_equal(trajectories.erased[0], trajectories.erased[1])


def test_different_seeds_give_different_trajectories(tmp_path):
    trajectories = run_blocks(make_config(tmp_path, replications=2))
    assert not np.array_equal(trajectories.x[0], trajectories.x[1])


def test_config_hash_ignores_order_and_output(tmp_path):
    a = make_config(output="runs/a", workers=1)
    b = make_config(output="runs/b", workers=4, persist_trajectories=False)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != make_config(seed=8).config_hash()
    reordered = make_config(model={"params": {"b": 1.2}, "dimension": 2, "name": "benchmark"})
    assert reordered.config_hash() == a.config_hash()


def test_overrides_reject_unknown_sections(tmp_path):
    config = make_config(tmp_path)
    assert config.with_overrides(**{"codec.levels": 4}).codec.levels == 4
    with pytest.raises(ConfigurationError):
        config.with_overrides(**{"nothing.here": 1})
    with pytest.raises(ConfigurationError):
        config.with_overrides(**{"codec.levels": 1})


def test_persisted_trajectory_reads_back(tmp_path):
    config = make_config(tmp_path, replications=2, horizon=50)
    trajectories, manifest = run_closed_loop(config)
    assert manifest.seeds == config.replication_seeds()
    restored = read_trajectory(Path(config.output) / "trajectories/rep-0001.jsonl")
    original = trajectories[1]
    assert restored.seed == original.seed
    assert np.allclose(restored.x, original.x)
    assert np.array_equal(restored.q, original.q)
    assert np.array_equal(restored.overflow, original.overflow)
    assert np.array_equal(restored.exponent, original.exponent)


def test_stability_summary(states_only):
    x = np.zeros((3, 101, 1))
    x[0, 80, 0] = 5.0
    summary = stability_summary(states_only(x), delta0=1.0)
    assert summary.tail_max == 5.0
    assert summary.bound == BOUNDED_FACTOR
    assert summary.bounded

    x[1, 90, 0] = np.inf
    diverged = stability_summary(states_only(x), delta0=1.0)
    assert diverged.diverged == 1
    assert not diverged.bounded


def test_stabilized_run_reports_consistent_verdicts(tmp_path):
    config = make_config(tmp_path)
    _, summaries = full_run(config)
    assert summaries["bounds"].verdicts.phr_necessary
    assert summaries["stopping"]["verified"]

    report = collate(config.output)
    assert report.consistent
    assert report.exit_code == 0
    assert "C ≥ V_hat: satisfied" in report.lines
    assert "verdicts: consistent" in report_text(report)


def test_report_flags_a_violation_under_a_stability_claim(tmp_path):
    writer = RunWriter(tmp_path / "run")
    writer.write_json("bounds.json", verdicts(Estimate(value=3.0), 2.0, 4.0, capacity=1.0))
    writer.write_json("stability.json", {"diverged": 0, "tail_max": 2.0, "bounded": True})
    writer.write_manifest("0" * 64, "claims", [1], [])
    report = collate(tmp_path / "run")
    assert set(report.violations) == {"C < L_inf", "C < V_hat"}
    assert report.stability_claims
    assert not report.consistent
    assert report.exit_code == 2


def test_report_names_a_missing_artifact(tmp_path):
    config = make_config(tmp_path)
    full_run(config)
    (Path(config.output) / "drift.csv").unlink()
    with pytest.raises(ReportError, match="drift.csv") as err:
        collate(config.output)
    assert err.value.exit_code == 3
    assert err.value.missing == ["drift.csv"]


def test_report_names_a_corrupted_artifact(tmp_path):
    config = make_config(tmp_path)
    full_run(config)
    path = Path(config.output) / "ams.csv"
    path.write_text(path.read_text() + "1,2\n")
    with pytest.raises(ReportError, match="ams.csv"):
        collate(config.output)


def test_malformed_csv_is_a_report_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2\n")
    with pytest.raises(ReportError, match="line 2"):
        read_csv(path)
    path.write_text("")
    with pytest.raises(ReportError, match="header"):
        read_csv(path)


def test_report_needs_a_manifest(tmp_path):
    with pytest.raises(ReportError, match="manifest.json"):
        read_manifest(tmp_path)


def test_axis_paths(tmp_path):
    config = make_config(tmp_path)
    assert axis_path(config, "epsilon") == "channel.epsilon"
    assert axis_path(config, "rate") == "channel.symbols"
    assert axis_path(config, "gain") == "model.params.b"
    assert axis_path(config, "codec.s") == "codec.s"
    linear = make_config(tmp_path, model={"name": "linear", "dimension": 1, "params": {"gains": [2.0]}})
    assert axis_path(linear, "gain") == "model.params.gains"


def test_sweep_needs_values(tmp_path):
    with pytest.raises(InputError):
        run_sweep(make_config(tmp_path), "epsilon", [])


def test_erasure_sweep_loses_capacity(tmp_path):
    config = make_config(
        tmp_path,
        horizon=100,
        replications=2,
        codec={"levels": 4},
        channel={"kind": "erasure", "epsilon": 0.1},
        estimators={"select": ["bounds"]},
        persist_trajectories=False,
    )
    rows, reports = run_sweep(config, "epsilon", [0.0, 0.2, 0.4])
    capacities = [r.capacity for r in rows]
    assert capacities == sorted(capacities, reverse=True)
    assert capacities[0] == pytest.approx(math.log2(17), abs=1e-6)
    assert capacities[2] == pytest.approx(0.6 * math.log2(17), abs=1e-6)
    assert all(r is not None for r in reports)
    root = Path(config.output)
    assert (root / "epsilon-0.2" / "bounds.json").exists()
    header, body = read_csv(root / "sweep.csv")
    assert header[0] == "value" and len(body) == 3
    assert collate(root).name == "desk:sweep:epsilon"


def test_noise_modulated_plant_reports_the_averaged_rate(tmp_path):
    config = make_config(
        tmp_path,
        model={"name": "modulated", "dimension": 2, "params": {"c": 0.8, "theta": 0.5}},
        codec={"kind": "open_loop"},
        estimators={"select": ["bounds"]},
        persist_trajectories=False,
    )
    _, summaries = full_run(config)
    report = summaries["bounds"]
    assert report.v_hat.label == "empirical"
    assert report.v_hat.value == pytest.approx(2 * math.log2(0.8), abs=0.03)
    assert report.l_inf == pytest.approx(2 * (math.log2(0.8) - 0.5))
    assert report.channel_capacity == 0.0
    assert report.sufficiency_threshold is None
    assert report.consistent()


def test_recorded_fields_follow_the_estimators(tmp_path):
    assert recorded_fields(make_config(tmp_path)) == RECORD_FIELDS
    lean = make_config(tmp_path, persist_trajectories=False, estimators={"select": ["bounds", "ams"]})
    assert recorded_fields(lean) == ("x",)
    stopping = lean.with_overrides(**{"estimators.select": ["drift"], "record": ["erased"]})
    assert set(recorded_fields(stopping)) == {"x", "overflow", "erased", "delta"}
    with pytest.raises(ConfigurationError):
        lean.with_overrides(record=["everything"])


def test_lean_run_keeps_only_what_the_estimators_read(tmp_path):
    full = make_config(tmp_path, replications=3, horizon=150)
    lean = full.with_overrides(persist_trajectories=False, **{"estimators.select": ["bounds", "stopping", "ams"]})
    everything = run_blocks(full)
    trajectories = run_blocks(lean)
    assert set(trajectories.recorded) == {"x", "overflow", "delta"}
    assert trajectories.u is None and trajectories.q is None
    assert np.array_equal(trajectories.x, everything.x)
    assert np.array_equal(trajectories.delta, everything.delta)

    writer = RunWriter(lean.output)
    summaries = analyze(lean, build_components(lean), trajectories, writer, [])
    assert summaries["stopping"]["verified"]
    with pytest.raises(InputError, match="did not record"):
        writer.write_trajectories(trajectories)


def test_stopping_times_need_the_overflow_log():
    bare = run_blocks(make_config(replications=1, horizon=20, persist_trajectories=False, estimators={"select": ["bounds"]}))
    with pytest.raises(InputError, match="overflow"):
        stopping_records(bare)
    with pytest.raises(ConfigurationError):
        record_arrays(1, 5, 1, ["x", "velocity"])
