import typing

import numpy as np

from zoomforge.channel.channels import ChannelModel
from zoomforge.codec.base import Coder
from zoomforge.dynamics.base import SystemModel
from zoomforge.dynamics.noise import NoiseStream
from zoomforge.estimators.trajectory import RECORD_FIELDS, STEP_FIELDS, TrajectorySet
from zoomforge.shared.errors import ConfigurationError


class ReplicationStreams(typing.NamedTuple):
    plant: NoiseStream
    channel: NoiseStream
    initial: NoiseStream


def replication_streams(model: SystemModel, seed: int) -> ReplicationStreams:
    """Independent substreams of one replication seed."""
    base = model.noise_stream(seed)
    return ReplicationStreams(
        base.spawn("plant"),
        base.spawn("channel"),
        base.spawn("x0", np.eye(model.dimension)),
    )


def initial_states(model: SystemModel, initial, streams: list[ReplicationStreams]) -> np.ndarray:
    n = model.dimension
    if initial is None:
        return np.zeros((len(streams), n))
    if initial.state is not None:
        if len(initial.state) != n:
            raise ConfigurationError(f"Initial state has {len(initial.state)} entries, model expects {n}.")
        return np.tile(np.asarray(initial.state, dtype=float), (len(streams), 1))
    mean = np.broadcast_to(np.asarray(initial.mean, dtype=float), (n,))
    draws = np.concatenate([s.initial.normal(1) for s in streams], axis=0) if streams else np.zeros((0, n))
    return mean + initial.std * draws


class ClosedLoop:
    """
    encoder → channel → decoder/controller → plant, stepped for a batch of
    replications at once. Each replication draws its plant noise and channel
    uniforms from its own streams in chunks, so a replication's path does not
    depend on which batch it runs in.
    """

    def __init__(
        self,
        model: SystemModel,
        coder: Coder,
        channel: ChannelModel | None = None,
        divergence_radius: float = 1e100,
        chunk: int = 4096,
    ):
        if coder.uses_channel and channel is None:
            raise ConfigurationError(f"{coder!r} needs a channel.")
        self.model = model
        self.coder = coder
        self.channel = channel
        self.divergence_radius = divergence_radius
        self.chunk = chunk

    def _transmit(self, q: np.ndarray, uniforms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if not self.coder.uses_channel:
            return q, np.zeros(q.shape, dtype=bool)
        qprime = self.channel.sample(q, uniforms)
        return qprime, self.channel.is_erasure(qprime)

    def run(
        self,
        x0: np.ndarray,
        streams: list[ReplicationStreams],
        horizon: int,
        record: bool = True,
        on_step: typing.Callable[[int, np.ndarray], bool] | None = None,
        seeds: list[int] | None = None,
        config_hash: str = "",
        fields: typing.Collection[str] | None = None,
    ) -> TrajectorySet | None:
        """
        Simulate `horizon` steps from x0 (R, N). `fields` names the arrays to
        keep (every one by default, x always); the others come back as None.
        With record=False nothing is stored and on_step(t, x_t) may return
        True to stop early.
        """
        model, coder = self.model, self.coder
        x = np.array(x0, dtype=float)
        reps, n = x.shape
        enc = coder.initial_state("encoder", reps)
        dec = coder.initial_state("decoder", reps)

        logs = record_arrays(reps, horizon, n, fields) if record else {}
        if logs:
            logs["x"][:, 0] = x

        t = 0
        while t < horizon:
            size = min(self.chunk, horizon - t)
            w = np.stack([s.plant.normal(size) for s in streams], axis=0)
            uniforms = np.stack([s.channel.uniform(size) for s in streams], axis=0)
            for j in range(size):
                q, in_range = coder.encode(x, enc)
                qprime, erased = self._transmit(q, uniforms[:, j])
                u, dec_next = coder.decoder_step(qprime, dec, erased)
                if logs:
                    _log_step(logs, t, u=u, q=q, qprime=qprime, overflow=~in_range, erased=erased,
                              exponent=enc.exponent, decoder_exponent=dec.exponent)
                    if "delta" in logs:
                        logs["delta"][:, t] = coder.delta(enc)
                _, enc = coder.encoder_step(x, enc, qprime, erased)
                dec = dec_next
                with np.errstate(over="ignore", invalid="ignore"):
                    x = model.transition(x, u, w[:, j])
                    gone = ~np.all(np.isfinite(x), axis=-1) | (np.max(np.abs(x), axis=-1) > self.divergence_radius)
                x[gone] = np.inf
                t += 1
                if logs:
                    logs["x"][:, t] = x
                elif on_step is not None and on_step(t, x):
                    return None

        if not record:
            return None
        _log_step(logs, horizon, exponent=enc.exponent, decoder_exponent=dec.exponent)
        if "delta" in logs:
            logs["delta"][:, horizon] = coder.delta(enc)
        return TrajectorySet(
            **{name: logs.get(name) for name in RECORD_FIELDS},
            seeds=list(seeds or []),
            config_hash=config_hash,
        )


_DTYPES = {"q": np.int64, "qprime": np.int64, "overflow": bool, "erased": bool,
           "exponent": np.int64, "decoder_exponent": np.int64}


def record_arrays(reps: int, horizon: int, n: int, fields: typing.Collection[str] | None = None) -> dict[str, np.ndarray]:
    """Empty logs for the named trajectory arrays, x always among them."""
    names = set(RECORD_FIELDS if fields is None else fields) | {"x"}
    if unknown := names - set(RECORD_FIELDS):
        raise ConfigurationError(f"Cannot record {', '.join(sorted(unknown))}; known: {', '.join(RECORD_FIELDS)}.")
    logs = {}
    for name in names:
        steps = horizon if name in STEP_FIELDS else horizon + 1
        shape = (reps, steps, n) if name in ("x", "u") else (reps, steps)
        logs[name] = np.empty(shape, dtype=_DTYPES.get(name, float))
    return logs


def _log_step(logs: dict[str, np.ndarray], t: int, **values):
    for name, value in values.items():
        if (log := logs.get(name)) is not None:
            log[:, t] = value
