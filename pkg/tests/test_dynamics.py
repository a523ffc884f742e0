import math

import numpy as np
import pytest

from zoomforge.dynamics import (
    BenchmarkPlant,
    ExpandingScalar,
    LinearModel,
    ModulatedGain,
    NoiseStream,
    build_model,
    check_model,
    log_jacobian,
    noise_factor,
    sample_noise,
    step,
)
from zoomforge.shared.errors import ConfigurationError
from zoomforge.shared.models.config import ModelSpec


def test_benchmark_step_at_pi():
    model = BenchmarkPlant(dimension=1, b=1.2)
    x = step(model, [math.pi], [0.0], [0.0])
    assert x[0] == pytest.approx(1.2 * math.pi)


def test_step_rejects_wrong_dimension():
    model = LinearModel(dimension=2, gains=[2.0, 3.0])
    with pytest.raises(ConfigurationError):
        step(model, [1.0], [0.0, 0.0], [0.0, 0.0])


def test_linear_log_jacobian_is_constant():
    model = LinearModel(dimension=2, gains=[2.0, 3.0])
    x = np.random.default_rng(1).normal(size=(50, 2))
    values = log_jacobian(model, x)
    assert np.allclose(values, math.log2(6.0))
    assert model.l1 == model.m1 == pytest.approx(math.log2(6.0))


def test_log_jacobian_of_shaped_scalar_at_origin():
    # x + 0.5 sin x has slope 1.5 at 0
    model = BenchmarkPlant(dimension=1, b=1.0)
    assert float(log_jacobian(model, np.array([0.0]))) == pytest.approx(math.log2(1.5))


def test_singular_linear_plant_is_rejected():
    with pytest.raises(ConfigurationError):
        LinearModel(dimension=2, matrix=[[1.0, 2.0], [2.0, 4.0]])


def test_expanding_plant_is_scalar():
    with pytest.raises(ConfigurationError):
        ExpandingScalar(dimension=2)


@pytest.mark.parametrize(
    "model",
    [
        LinearModel(dimension=2, gains=[2.0, 0.5]),
        BenchmarkPlant(dimension=2, b=1.2),
        ExpandingScalar(c=2.0),
    ],
    ids=["linear", "benchmark", "expanding"],
)
def test_catalog_models_pass_their_checks(model):
    result = check_model(model, NoiseStream(3, dimension=model.dimension), samples=50, pairs=2000)
    assert result.ok()
    assert result.bound_violations == 0
    assert result.control_at_origin == pytest.approx(0.0, abs=1e-12)


def test_noise_mean_and_determinism():
    a = sample_noise(NoiseStream(11), 100_000)
    b = sample_noise(NoiseStream(11), 100_000)
    assert np.array_equal(a, b)
    assert abs(float(a.mean())) < 0.02


def test_noise_stream_replay_matches_position():
    stream = NoiseStream(5)
    stream.uniform(10)
    expected = stream.uniform(3)
    replayed = NoiseStream.replay(5, 10)
    assert np.array_equal(replayed.uniform(3), expected)


def test_noise_stream_replay_of_vector_draws():
    stream = NoiseStream(5, dimension=2)
    stream.normal(10)
    position = stream.draw_index
    expected = stream.normal(3)
    assert stream.kind == "normal"
    replayed = NoiseStream.replay(5, position, dimension=2, kind="normal")
    assert np.array_equal(replayed.normal(3), expected)


def test_mixed_draws_mark_the_stream():
    stream = NoiseStream(5)
    stream.normal(2)
    stream.uniform(2)
    assert stream.kind == "mixed"
    with pytest.raises(ValueError):
        stream.skip(1, kind="poisson")


def test_spawned_streams_are_keyed_by_tag():
    base = NoiseStream(9)
    assert np.array_equal(base.spawn("plant").normal(5), NoiseStream(9).spawn("plant").normal(5))
    assert not np.array_equal(base.spawn("plant").normal(5), base.spawn("channel").normal(5))


def test_noise_factor_from_covariance():
    cov = [[4.0, 1.0], [1.0, 2.0]]
    factor = noise_factor(2, covariance=cov)
    assert np.allclose(factor @ factor.T, cov)
    with pytest.raises(ConfigurationError):
        noise_factor(2, covariance=[[1.0, 2.0], [2.0, 1.0]])


def test_build_model_from_spec():
    model = build_model(ModelSpec(name="linear", dimension=1, params={"gains": [4.0]}))
    assert isinstance(model, LinearModel)
    assert model.certificate.a == pytest.approx(4.0)
    with pytest.raises(ConfigurationError):
        build_model(ModelSpec(name="benchmark", params={"gain": 2.0}))


def test_modulated_gain_jacobian_follows_the_noise():
    model = ModulatedGain(dimension=2, c=3.0, theta=0.5)
    x = np.ones((1, 2))
    assert float(log_jacobian(model, x, np.zeros((1, 2)))[0]) == pytest.approx(2 * math.log2(3.0))
    big = float(log_jacobian(model, x, np.full((1, 2), 50.0))[0])
    assert big == pytest.approx(2 * (math.log2(3.0) + 0.5))
    assert model.jacobian_depends_on_noise
    assert model.certificate is None


def test_modulated_gain_steps_without_additive_noise():
    model = ModulatedGain(dimension=2, c=3.0, theta=0.5)
    assert np.allclose(step(model, [1.0, 0.0], [0.5, 0.0], [0.0, 0.0]), [3.5, 0.0])
    assert np.allclose(step(model, [0.0, 0.0], [0.0, 0.0], [4.0, -4.0]), [0.0, 0.0])
    result = check_model(model, NoiseStream(3, dimension=2), samples=50)
    assert result.ok()
    assert result.contraction_ratio is None
    with pytest.raises(ConfigurationError):
        ModulatedGain(theta=-1.0)


@pytest.mark.parametrize(
    "model",
    [
        LinearModel(dimension=2, gains=[2.0, 0.5]),
        BenchmarkPlant(dimension=2, b=1.2),
        ModulatedGain(dimension=2, c=3.0, theta=0.5),
    ],
    ids=["linear", "benchmark", "modulated"],
)
def test_control_enters_through_the_identity(model):
    x, w, u = np.array([0.7, -1.3]), np.array([0.2, -0.4]), np.array([0.25, -2.0])
    shift = step(model, x, u, w) - step(model, x, np.zeros(2), w)
    assert np.allclose(shift, u)


def test_scalar_plant_control_enters_through_the_identity():
    model = ExpandingScalar(c=2.0)
    assert step(model, [1.0], [0.5], [0.1])[0] - step(model, [1.0], [0.0], [0.1])[0] == pytest.approx(0.5)
