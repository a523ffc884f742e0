import math

import numpy as np
import pytest

from zoomforge.channel import ChannelModel
from zoomforge.codec import FixedQuantizerCoder, OpenLoopCoder
from zoomforge.dynamics import LinearModel
from zoomforge.estimators import (
    OccupationHistogram,
    TrajectorySet,
    ams_cesaro_check,
    bode_integral,
    bounded_box_mass,
    cesaro_grid,
    entropy_estimate,
    entropy_growth_rate,
    escape_probability,
    occupation_histogram,
    transience_scan,
    wilson,
)
from zoomforge.harness.loops import run_bode_loop
from zoomforge.shared.errors import InputError
from zoomforge.shared.models.config import BodeSpec, CodecSpec

GAUSSIAN_BITS = 0.5 * math.log2(2 * math.pi * math.e)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_gaussian_entropy(sigma):
    x = np.random.default_rng(1).normal(scale=sigma, size=100_000)
    assert entropy_estimate(x) == pytest.approx(GAUSSIAN_BITS + math.log2(sigma), abs=0.05)


def test_uniform_entropy():
    x = np.random.default_rng(2).uniform(size=100_000)
    assert entropy_estimate(x) == pytest.approx(0.0, abs=0.05)


def test_entropy_ignores_translation():
    x = np.random.default_rng(3).normal(size=(5000, 2))
    assert entropy_estimate(x + np.array([100.0, -7.0])) == pytest.approx(entropy_estimate(x), abs=1e-9)


def test_entropy_scaling_identity():
    x = np.random.default_rng(4).normal(size=(100_000, 2))
    scaled = x * np.array([2.0, 3.0])
    assert entropy_estimate(scaled) - entropy_estimate(x) == pytest.approx(math.log2(6.0), abs=0.1)


def test_entropy_input_checks():
    with pytest.raises(InputError):
        entropy_estimate(np.zeros(10))
    with pytest.raises(InputError):
        entropy_estimate(np.full(200, np.inf))
    with pytest.raises(InputError):
        entropy_estimate(np.zeros(200))
    notes = []
    x = np.concatenate([np.random.default_rng(0).normal(size=500), np.zeros(10)])
    entropy_estimate(x, notes=notes)
    assert notes and "zero k-NN distance" in notes[0]


def test_open_loop_entropy_grows_one_bit_per_step():
    rng = np.random.default_rng(6)
    x = np.zeros(10_000)
    snapshots = {}
    for t in range(1, 41):
        x = 2 * x + rng.normal(size=x.size)
        if t % 5 == 0:
            snapshots[t] = x.copy()
    fit = entropy_growth_rate(snapshots)
    assert fit.slope == pytest.approx(1.0, abs=0.1)
    assert fit.times == sorted(snapshots)


def test_stationary_entropy_does_not_grow():
    rng = np.random.default_rng(7)
    snapshots = {t: rng.normal(size=5000) for t in (10, 20, 30, 40)}
    assert entropy_growth_rate(snapshots).slope == pytest.approx(0.0, abs=0.05)


def test_cesaro_grid_doubles_down_to_min():
    assert cesaro_grid(255, 16) == [16, 32, 64, 128, 256]
    assert cesaro_grid(5, 64) == [6]


def test_iid_cesaro_average_is_the_box_probability(states_only):
    x = np.random.default_rng(8).normal(size=(4000, 256, 1))
    rows, summary = ams_cesaro_check(states_only(x), [([-1.0], [1.0])], min_n=16)
    assert all(r.cesaro == pytest.approx(0.6827, abs=0.01) for r in rows)
    assert summary.max_final_gap < 0.02
    assert summary.boxes[0].final_mass == pytest.approx(0.6827, abs=0.03)


def test_escaping_mass_leaves_every_box(states_only):
    t = np.arange(101, dtype=float)
    x = np.tile((4.0**t)[None, :, None], (3, 1, 1))
    _, summary = ams_cesaro_check(states_only(x), [([-10.0], [10.0])], min_n=8)
    box = summary.boxes[0]
    assert box.final_mass == 0.0
    assert box.final_average < 0.1


def test_escape_probability_of_a_resting_state(states_only):
    rows = escape_probability(states_only(np.zeros((10, 101, 2))), "T")
    assert all(r.fraction == 1.0 for r in rows)
    assert rows[-1].t == 100


def test_escape_probability_of_an_exploding_state(states_only):
    t = np.arange(101, dtype=float)
    x = np.tile((4.0**t)[None, :, None], (10, 1, 1))
    rows = escape_probability(states_only(x), "T", times=[1, 10, 100])
    assert [r.fraction for r in rows] == [0.0, 0.0, 0.0]
    assert rows[0].ci_high < 0.5


def test_escape_probability_validates_the_threshold(states_only):
    with pytest.raises(InputError):
        escape_probability(states_only(np.zeros((2, 101, 1))), "exp2(T)")


def test_bounded_box_mass(states_only):
    x = np.zeros((4, 11, 1))
    x[:2, 5:, 0] = 1000.0
    rows = bounded_box_mass(states_only(x), 10.0, times=[0, 10])
    assert [r.fraction for r in rows] == [1.0, 0.5]


def test_wilson_interval():
    low, high = wilson(50, 100)
    assert low < 0.5 < high
    assert wilson(0, 0) == (0.0, 1.0)


def test_histogram_mass_balances():
    hist = OccupationHistogram.symmetric(1.0, 2, bins=8)
    hist.add(np.array([[0.0, 0.0], [0.5, -0.5], [2.0, 0.0], [np.inf, 0.0]]))
    assert hist.total == 4
    assert hist.out_of_box == 2
    assert hist.measure().sum() + hist.out_of_box_mass == pytest.approx(1.0)


def test_occupation_histogram_box_from_quantile(states_only):
    x = np.random.default_rng(9).normal(size=(20, 201, 1))
    hist = occupation_histogram(states_only(x), bins=16, quantile=0.99)
    assert hist.out_of_box_mass == pytest.approx(0.01, abs=0.005)


def test_bode_integral_of_pure_channel_noise():
    v = np.random.default_rng(10).normal(size=2**18)
    assert bode_integral(v, v).integral == pytest.approx(0.0, abs=0.05)


def test_bode_integral_of_amplified_white_noise():
    rng = np.random.default_rng(11)
    v = rng.normal(size=2**18)
    y = rng.normal(scale=2.0, size=2**18)
    assert bode_integral(y, v).integral == pytest.approx(1.0, abs=0.1)


def test_bode_integral_flags_drift():
    rng = np.random.default_rng(12)
    v = rng.normal(size=2**14)
    y = v + np.linspace(0.0, 50.0, v.size)
    notes = []
    result = bode_integral(y, v, notes=notes)
    assert not result.stationary
    assert notes


def test_bode_integral_input_checks():
    with pytest.raises(InputError):
        bode_integral(np.zeros(100), np.zeros(100))
    with pytest.raises(InputError):
        bode_integral(np.zeros(10_000), np.zeros(9_999))


def test_stabilized_loop_meets_the_unstable_pole_bound():
    records = run_bode_loop(BodeSpec(gain_a=2.0, samples=2**18, burn_in=1000), seed=3)
    result = bode_integral(records.qprime, records.v)
    assert result.integral >= 1.0 - 0.15
    assert result.stationary


def test_bode_loop_needs_a_stable_pole():
    from zoomforge.shared.errors import ConfigurationError

    with pytest.raises(ConfigurationError):
        run_bode_loop(BodeSpec(gain_a=2.0, controller_gain=0.5))


def test_contracting_plant_always_returns():
    model = LinearModel(gains=[0.5])
    rows, summary = transience_scan(model, OpenLoopCoder(model), [2.0, 4.0], horizon=200, replications=200, radius=1.0)
    assert all(r.fraction == 1.0 for r in rows)
    assert not summary.bounded_away


def test_fixed_quantizer_loop_is_transient():
    model = LinearModel(gains=[2.0], noise_std=4.0)
    coder = FixedQuantizerCoder.from_spec(CodecSpec(kind="fixed", levels=2, delta0=1.0), model)
    u = coder.control_bound
    rows, summary = transience_scan(
        model, coder, [2 * u, 4 * u, 8 * u], horizon=200, replications=2000, radius=u,
        seed=1, channel=ChannelModel.noiseless(coder.symbols),
    )
    assert summary.decreasing
    assert summary.bounded_away
    assert rows[-1].fraction < 0.9
    assert all(r.returned + r.escaped + r.undecided == r.replications for r in rows)


def test_transience_scan_input_checks():
    model = LinearModel(gains=[0.5])
    with pytest.raises(InputError):
        transience_scan(model, OpenLoopCoder(model), [], horizon=10, replications=2, radius=1.0)
    with pytest.raises(InputError):
        transience_scan(model, OpenLoopCoder(model), [1.0], horizon=10, replications=2, radius=5.0, escape_radius=2.0)


def test_trajectory_set_rejects_ragged_logs(states_only):
    trajectories = states_only(np.zeros((2, 11, 1)))
    with pytest.raises(InputError):
        TrajectorySet(**{**_fields(trajectories), "q": np.ones((2, 9), dtype=np.int64)})[0]


def _fields(trajectories: TrajectorySet) -> dict:
    names = ("x", "u", "q", "qprime", "overflow", "erased", "exponent", "decoder_exponent", "delta")
    return {name: getattr(trajectories, name) for name in names}
