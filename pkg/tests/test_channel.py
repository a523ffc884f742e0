import math

import numpy as np
import pytest

from zoomforge.channel import ChannelModel, build_channel, capacity, mutual_information, read_kernel_csv, transmit
from zoomforge.dynamics import NoiseStream
from zoomforge.shared.errors import ConfigurationError, InputError
from zoomforge.shared.models.config import ChannelSpec


def binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@pytest.mark.parametrize("p", [0.01, 0.05, 0.1, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45])
def test_bsc_capacity_closed_form(p):
    result = capacity(ChannelModel.bsc(p))
    assert result.converged
    assert result.capacity == pytest.approx(1.0 - binary_entropy(p), abs=1e-6)


@pytest.mark.parametrize("epsilon", [0.0, 0.2, 0.3, 0.7])
def test_erasure_capacity_closed_form(epsilon):
    result = capacity(ChannelModel.erasure(2, epsilon))
    assert result.capacity == pytest.approx(1.0 - epsilon, abs=1e-6)


def test_erasure_capacity_scales_with_alphabet():
    result = capacity(ChannelModel.erasure(65, 0.2))
    assert result.capacity == pytest.approx(0.8 * math.log2(65), abs=1e-6)


@pytest.mark.parametrize("symbols", [2, 5, 65])
def test_noiseless_capacity_is_log_alphabet(symbols):
    result = capacity(ChannelModel.noiseless(symbols))
    assert result.capacity == pytest.approx(math.log2(symbols), abs=1e-12)
    assert result.iterations == 1


def test_capacity_lower_bounds_never_decrease():
    kernel = [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]]
    result = capacity(ChannelModel.general(kernel))
    assert all(b >= a - 1e-12 for a, b in zip(result.lower_bounds, result.lower_bounds[1:]))
    assert result.capacity >= mutual_information(ChannelModel.general(kernel), [1 / 3] * 3) - 1e-12


def test_kernel_rows_must_sum_to_one():
    with pytest.raises(ConfigurationError, match="row 2"):
        ChannelModel.general([[0.5, 0.5], [0.5, 0.4]])


def test_mutual_information_rejects_bad_distribution():
    with pytest.raises(InputError):
        mutual_information(ChannelModel.bsc(0.1), [0.6, 0.6])


def test_bsc_flip_fraction():
    channel = ChannelModel.bsc(0.1)
    out = transmit(channel, np.ones(100_000, dtype=np.int64), NoiseStream(4))
    assert np.mean(out == 2) == pytest.approx(0.1, abs=0.01)


def test_noiseless_transmit_is_identity():
    channel = ChannelModel.noiseless(5)
    q = np.array([1, 2, 3, 4, 5])
    assert np.array_equal(transmit(channel, q, NoiseStream(0)), q)
    assert transmit(channel, 3, NoiseStream(0)) == 3


def test_erasure_outputs_are_flagged():
    channel = ChannelModel.erasure(4, 0.5)
    out = transmit(channel, np.full(10_000, 2), NoiseStream(1))
    assert set(np.unique(out)) <= {2, 5}
    assert np.array_equal(channel.is_erasure(out), out == 5)


def test_transmit_consumes_one_uniform_per_symbol():
    stream = NoiseStream(2)
    transmit(ChannelModel.bsc(0.3), np.ones(7, dtype=np.int64), stream)
    assert stream.draw_index == 7


def test_out_of_alphabet_input():
    with pytest.raises(ConfigurationError):
        transmit(ChannelModel.noiseless(3), 4, NoiseStream(0))


def test_build_channel_sizes_to_codec():
    channel = build_channel(ChannelSpec(kind="erasure", epsilon=0.1), 17)
    assert channel.inputs == 17
    assert channel.outputs == 18


def test_read_kernel_csv(tmp_path):
    path = tmp_path / "kernel.csv"
    path.write_text("0.9,0.1\n0.2,0.8\n")
    assert read_kernel_csv(path) == [[0.9, 0.1], [0.2, 0.8]]
    channel = build_channel(ChannelSpec(kind="general", kernel_csv=str(path)), 2)
    assert channel.kernel.shape == (2, 2)
