import math

import numpy as np
import pytest

from zoomforge.estimators import drift_check, stopping_records, stopping_times, tail_check


def overflow_log(steps: int, overflows=()) -> np.ndarray:
    flags = np.zeros((1, steps), dtype=bool)
    flags[0, list(overflows)] = True
    return flags


def test_always_in_range_gives_consecutive_times(states_only):
    trajectories = states_only(np.zeros((1, 11, 1)), overflow_log(10))
    record = stopping_times(trajectories[0])
    assert record.times.tolist() == list(range(10))
    assert record.satisfies(trajectories[0])


def test_overflows_stretch_the_gap(states_only):
    trajectories = states_only(np.zeros((1, 9, 1)), overflow_log(8, [3, 4]))
    record = stopping_times(trajectories[0])
    assert record.times.tolist() == [0, 1, 2, 5, 6, 7]
    assert 3 in record.gaps.tolist()
    assert record.satisfies(trajectories[0])


def test_long_clean_run_has_one_time_per_step(states_only):
    record = stopping_times(states_only(np.zeros((1, 1001, 1)), overflow_log(1000))[0])
    assert len(record) == 1000


def test_replay_catches_a_tampered_record(states_only):
    trajectory = states_only(np.zeros((1, 9, 1)), overflow_log(8, [3, 4]))[0]
    record = stopping_times(trajectory)
    record.times = np.array([0, 1, 2, 4, 5, 6, 7])
    assert not record.satisfies(trajectory)


def geometric_zoom(reps: int, steps: int, delta0: float, alpha: float):
    """In range at every step while Δ shrinks by alpha each time."""
    delta = delta0 * alpha ** np.arange(steps + 1)
    return np.zeros((reps, steps + 1, 1)), np.zeros((reps, steps), dtype=bool), np.tile(delta, (reps, 1))


def test_in_range_drift_is_two_log_alpha(states_only):
    x, overflow, delta = geometric_zoom(4, 60, 2.0**60, 0.5)
    records = stopping_records(states_only(x, overflow, delta))
    rows, summary = drift_check(records, floor=1.0, bins=4, alpha=0.5, zoom_out=2.0)
    assert summary.epochs >= 100
    assert summary.b0 == pytest.approx(-2 * math.log2(0.5))
    assert all(r.mean_drift == pytest.approx(2 * math.log2(0.5)) for r in rows)
    assert summary.all_bins_negative
    assert summary.plugin_drift == pytest.approx(2 * math.log2(0.5))


def test_drift_warns_when_underpowered(states_only):
    x, overflow, delta = geometric_zoom(1, 10, 2.0**10, 0.5)
    notes = []
    _, summary = drift_check(stopping_records(states_only(x, overflow, delta)), floor=1.0, notes=notes)
    assert summary.underpowered
    assert notes and "underpowered" in notes[0]


def test_tail_mass_falls_with_delta(states_only):
    rng = np.random.default_rng(5)
    reps, steps = 20, 400
    delta = np.tile(2.0 ** rng.integers(0, 4, size=steps + 1), (reps, 1)).astype(float)
    # the step after a small Δ overflows more often
    overflow = np.zeros((reps, steps), dtype=bool)
    overflow[:, 1:] = rng.random((reps, steps - 1)) < 0.6 / delta[:, : steps - 1]
    rows, summary = tail_check(stopping_records(states_only(np.zeros((reps, steps + 1, 1)), overflow, delta)), bins=4, kmax=6)
    assert summary.underpowered
    assert len(summary.bins) == 4
    assert all(b.decreasing for b in summary.bins)
    assert summary.bins[0].p_gap_ge_2 > summary.bins[-1].p_gap_ge_2
    assert {r.k for r in rows} == set(range(1, 7))
    for item in summary.bins:
        if item.rate is not None:
            assert item.rate > 1.0
