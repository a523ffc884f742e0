import numpy as np
import pytest

import zoomforge
from zoomforge.estimators import TrajectorySet
from zoomforge.shared.models.config import ExperimentConfig, load_experiment
from zoomforge.shared.utils import ensure_registries


@pytest.fixture(autouse=True, scope="session")
def registries():
    ensure_registries()
    return zoomforge.SETTINGS


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run inside an empty directory so logs and run folders land in tmp."""
    monkeypatch.chdir(tmp_path)
    return tmp_path


def make_config(tmp_path=None, **overrides) -> ExperimentConfig:
    """
    A small benchmark experiment. Nested sections are given as dicts, e.g.
    make_config(codec={"levels": 4}).
    """
    data = {
        "name": "desk",
        "horizon": 200,
        "replications": 4,
        "seed": 7,
        "model": {"name": "benchmark", "dimension": 2, "params": {"b": 1.2}},
        "codec": {"kind": "zoom", "levels": 8},
        "estimators": {"select": ["bounds", "stopping", "drift", "tail", "ams", "escape", "histogram"], "ams_min_n": 16},
    }
    if tmp_path is not None:
        data["output"] = str(tmp_path / "run")
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return load_experiment(data)


@pytest.fixture
def config_factory(tmp_path):
    def factory(**overrides) -> ExperimentConfig:
        return make_config(tmp_path, **overrides)

    return factory


def trajectories_from_states(x: np.ndarray, overflow: np.ndarray | None = None, delta: np.ndarray | None = None) -> TrajectorySet:
    """A trajectory set built from states alone; the codec logs are filler unless given."""
    reps, steps, n = x.shape
    horizon = steps - 1
    return TrajectorySet(
        x=np.asarray(x, dtype=float),
        u=np.zeros((reps, horizon, n)),
        q=np.ones((reps, horizon), dtype=np.int64),
        qprime=np.ones((reps, horizon), dtype=np.int64),
        overflow=np.zeros((reps, horizon), dtype=bool) if overflow is None else overflow,
        erased=np.zeros((reps, horizon), dtype=bool),
        exponent=np.zeros((reps, steps), dtype=np.int64),
        decoder_exponent=np.zeros((reps, steps), dtype=np.int64),
        delta=np.ones((reps, steps)) if delta is None else delta,
    )


@pytest.fixture
def states_only():
    return trajectories_from_states
