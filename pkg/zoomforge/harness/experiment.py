import typing
from concurrent.futures import Executor

from loguru import logger

from zoomforge.channel import ChannelModel, build_channel, capacity
from zoomforge.codec import Coder, build_coder
from zoomforge.dynamics import SystemModel, build_model
from zoomforge.estimators.trajectory import RECORD_FIELDS, TrajectorySet
from zoomforge.shared.models.config import ExperimentConfig
from zoomforge.shared.models.reports import CapacityResult, RunManifest
from zoomforge.shared.utils import LogTime
from .persistence import RunWriter
from .simulate import ClosedLoop, initial_states, replication_streams

# trajectory arrays each estimator reads besides x
ESTIMATOR_FIELDS = {
    "stopping": ("overflow", "delta"),
    "drift": ("overflow", "delta"),
    "tail": ("overflow", "delta"),
}


class Components(typing.NamedTuple):
    model: SystemModel
    coder: Coder
    # None when the coder never uses the channel
    channel: ChannelModel | None

    def capacity(self) -> CapacityResult:
        if self.channel is None:
            return CapacityResult(
                capacity=0.0, input_distribution=[], iterations=0, gap=0.0, tolerance=0.0, converged=True
            )
        return capacity(self.channel)


def build_components(config: ExperimentConfig) -> Components:
    """
    Model, coder and channel of a config. The codebook is checked against the
    channel alphabet here, before anything is simulated.
    """
    model = build_model(config.model)
    coder = build_coder(config.codec, model, config.initial)
    if not coder.uses_channel:
        return Components(model, coder, None)
    channel = build_channel(config.channel, coder.symbols)
    coder = build_coder(config.codec, model, config.initial, channel)
    return Components(model, coder, channel)


def recorded_fields(config: ExperimentConfig) -> tuple[str, ...]:
    """
    The trajectory arrays a run keeps: every one when trajectories are
    persisted, otherwise x, what the selected estimators read and the
    config's extra `record` list.
    """
    if config.persist_trajectories:
        return RECORD_FIELDS
    names = {"x", *config.record}
    for estimator in config.estimators.select:
        names.update(ESTIMATOR_FIELDS.get(estimator, ()))
    return tuple(name for name in RECORD_FIELDS if name in names)


def simulate_replications(config: ExperimentConfig, parts: Components, indices: list[int]) -> TrajectorySet:
    seeds = config.replication_seeds()
    seeds = [seeds[i] for i in indices]
    streams = [replication_streams(parts.model, s) for s in seeds]
    x0 = initial_states(parts.model, config.initial, streams)
    loop = ClosedLoop(parts.model, parts.coder, parts.channel, config.divergence_radius, config.chunk)
    return loop.run(
        x0, streams, config.horizon, seeds=seeds, config_hash=config.config_hash(), fields=recorded_fields(config)
    )


def run_closed_loop(
    config: ExperimentConfig,
    executor: Executor | None = None,
    writer: RunWriter | None = None,
    warnings: list[str] | None = None,
) -> tuple[TrajectorySet, RunManifest]:
    """
    Simulate every replication of a config and persist the canonical config
    echo, the trajectories (when enabled) and the manifest.
    """
    from .workers import run_blocks

    build_components(config)
    writer = writer or RunWriter(config.output)
    with LogTime(f"Simulating {config.replications} x {config.horizon} steps of '{config.name}'"):
        trajectories = run_blocks(config, executor)

    writer.write_text("config.json", config.canonical_json().decode("utf-8") + "\n")
    if config.persist_trajectories:
        writer.write_trajectories(trajectories)
    manifest = writer.write_manifest(config.config_hash(), config.name, trajectories.seeds, warnings or [])
    logger.info(f"Run '{config.name}' written to {writer.root} (config {manifest.config_hash[:12]}).")
    return trajectories, manifest
