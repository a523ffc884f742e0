from dataclasses import dataclass, field

import numpy as np

from zoomforge.shared.errors import InputError

# per-step arrays, indexed t = 0..T-1
STEP_FIELDS = ("u", "q", "qprime", "overflow", "erased")
# state-like arrays, indexed t = 0..T
STATE_FIELDS = ("x", "exponent", "decoder_exponent", "delta")
RECORD_FIELDS = STEP_FIELDS + STATE_FIELDS


@dataclass(slots=True)
class Trajectory:
    """
    One replication. x, the Δ grid exponents and Δ are recorded at
    t = 0..T; u, q, q′ and the flags at t = 0..T-1. overflow[t] is the
    encoder's test max_i |h_t^i| > 1. Arrays a run did not record are None.
    """

    x: np.ndarray
    u: np.ndarray | None
    q: np.ndarray | None
    qprime: np.ndarray | None
    overflow: np.ndarray | None
    erased: np.ndarray | None
    exponent: np.ndarray | None
    decoder_exponent: np.ndarray | None
    delta: np.ndarray | None
    seed: int = 0
    config_hash: str = ""

    def __post_init__(self):
        horizon = len(self.x) - 1
        for name in RECORD_FIELDS:
            if (value := getattr(self, name)) is None:
                continue
            expected = horizon if name in STEP_FIELDS else horizon + 1
            if len(value) != expected:
                raise InputError(f"Trajectory field '{name}' has length {len(value)}, expected {expected}.")

    @property
    def horizon(self) -> int:
        return len(self.x) - 1

    @property
    def in_range(self) -> np.ndarray:
        return ~self.overflow


@dataclass(slots=True)
class TrajectorySet:
    """
    R replications of one configuration, stored with a leading replication
    axis. Arrays the run did not record are None.
    """

    x: np.ndarray
    u: np.ndarray | None
    q: np.ndarray | None
    qprime: np.ndarray | None
    overflow: np.ndarray | None
    erased: np.ndarray | None
    exponent: np.ndarray | None
    decoder_exponent: np.ndarray | None
    delta: np.ndarray | None
    seeds: list[int] = field(default_factory=list)
    config_hash: str = ""

    def __len__(self):
        return self.x.shape[0]

    def __getitem__(self, i: int) -> Trajectory:
        data = {name: None if (v := getattr(self, name)) is None else v[i] for name in RECORD_FIELDS}
        return Trajectory(**data, seed=self.seeds[i] if self.seeds else 0, config_hash=self.config_hash)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def horizon(self) -> int:
        return self.x.shape[1] - 1

    @property
    def dimension(self) -> int:
        return self.x.shape[2]

    @property
    def recorded(self) -> tuple[str, ...]:
        return tuple(name for name in RECORD_FIELDS if getattr(self, name) is not None)

    def require(self, *names: str):
        if missing := [name for name in names if getattr(self, name) is None]:
            raise InputError(f"The run did not record {', '.join(missing)}.")

    def states_at(self, t: int) -> np.ndarray:
        """x_t across replications, shape (R, N)."""
        return self.x[:, t, :]

    @classmethod
    def concatenate(cls, parts: list["TrajectorySet"]) -> "TrajectorySet":
        """Merge replication blocks in the order given."""
        if not parts:
            raise InputError("No trajectories to merge.")
        data = {
            name: None
            if any(getattr(p, name) is None for p in parts)
            else np.concatenate([getattr(p, name) for p in parts], axis=0)
            for name in RECORD_FIELDS
        }
        seeds = [s for p in parts for s in p.seeds]
        return cls(**data, seeds=seeds, config_hash=parts[0].config_hash)

    @classmethod
    def from_trajectories(cls, trajectories: list[Trajectory]) -> "TrajectorySet":
        if not trajectories:
            raise InputError("Empty trajectory set.")
        data = {
            name: None
            if any(getattr(t, name) is None for t in trajectories)
            else np.stack([getattr(t, name) for t in trajectories])
            for name in RECORD_FIELDS
        }
        return cls(**data, seeds=[t.seed for t in trajectories], config_hash=trajectories[0].config_hash)


def as_set(trajectories) -> TrajectorySet:
    if isinstance(trajectories, TrajectorySet):
        if len(trajectories) == 0:
            raise InputError("Empty trajectory set.")
        return trajectories
    return TrajectorySet.from_trajectories(list(trajectories))
