import typing
from concurrent.futures import Executor

import numpy as np
from scipy import signal

from zoomforge.dynamics.noise import NoiseStream
from zoomforge.estimators.entropy import GrowthFit, entropy_growth_rate
from zoomforge.estimators.trajectory import TrajectorySet
from zoomforge.estimators.transience import TransienceRow, TransienceSummary, transience_scan
from zoomforge.shared.errors import ConfigurationError, InputError
from zoomforge.shared.models.config import BodeSpec, ExperimentConfig
from zoomforge.shared.utils import LogTime
from .experiment import Components, build_components


class BodeRecords(typing.NamedTuple):
    qprime: np.ndarray
    v: np.ndarray
    gain: float
    controller_gain: float


def run_bode_loop(spec: BodeSpec, seed: int = 0) -> BodeRecords:
    """
    x+ = a x + u + w observed through the additive channel q′ = x + v and
    driven by u = -g q′. Returns the (q′, v) records after burn-in.
    """
    a = spec.gain_a
    g = a if spec.controller_gain is None else spec.controller_gain
    pole = a - g
    if abs(pole) >= 1.0:
        raise ConfigurationError(f"Controller gain {g:g} leaves the loop pole at {pole:g}; |a - g| must be below 1.")

    total = spec.burn_in + spec.samples
    base = NoiseStream(seed)
    w = spec.sigma_w * base.spawn("plant").normal(total)[:, 0]
    v = spec.sigma_v * base.spawn("channel").normal(total)[:, 0]
    # x_t = pole x_{t-1} + w_{t-1} - g v_{t-1}, x_0 = 0
    x = signal.lfilter([0.0, 1.0], [1.0, -pole], w - g * v)
    qprime = x + v
    return BodeRecords(qprime[spec.burn_in:], v[spec.burn_in:], a, g)


def run_entropy_growth(
    config: ExperimentConfig,
    trajectories: TrajectorySet | None = None,
    executor: Executor | None = None,
    notes: list[str] | None = None,
) -> GrowthFit:
    """Entropy of x_t across replications at the configured snapshot times, and its slope."""
    from .workers import run_blocks

    times = [t for t in config.snapshots if t > 0]
    if len(times) < 3:
        raise InputError("Entropy growth needs at least 3 positive snapshot times.")
    if trajectories is None:
        build_components(config)
        trajectories = run_blocks(config, executor)
    with LogTime(f"Entropy estimates at {len(times)} snapshot times"):
        return entropy_growth_rate(
            {t: trajectories.states_at(t) for t in times}, config.estimators.entropy_k, notes
        )


def run_transience(
    config: ExperimentConfig,
    parts: Components | None = None,
) -> tuple[list[TransienceRow], TransienceSummary]:
    """The transience scan from the [transience] table of a config."""
    spec = config.transience
    parts = parts or build_components(config)
    if not parts.coder.finite_memory:
        raise ConfigurationError(f"{parts.coder!r} does not have finite memory; the transience scan needs one.")

    unit = 1.0
    if spec.scale == "control_bound":
        unit = getattr(parts.coder, "control_bound", 0.0)
        if unit <= 0:
            raise ConfigurationError(f"{parts.coder!r} has no positive control bound to scale the start levels by.")

    with LogTime("Transience scan"):
        return transience_scan(
            parts.model,
            parts.coder,
            [s * unit for s in spec.starts],
            spec.horizon or config.horizon,
            spec.replications or config.replications,
            spec.radius * unit,
            escape_radius=spec.escape_radius,
            seed=config.seed,
            channel=parts.channel,
            chunk=min(config.chunk, 256),
        )
