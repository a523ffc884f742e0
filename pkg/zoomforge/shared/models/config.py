import copy
import math
import typing
from typing import Literal, Optional

import pydantic
from pydantic import Field, field_validator, model_validator

from zoomforge.shared.errors import ConfigurationError
from zoomforge.shared.utils import derive_seed
from .mixins import CanonicalMixin
from .fields import (
    box,
    coder_kind,
    fraction,
    level_count,
    model_name,
    optional_kernel_matrix,
    positive_float,
    positive_int,
    probability,
    seed64,
    threshold_expression,
    time_grid,
)
from . import validators


class ModelSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    name: model_name = "benchmark"
    dimension: positive_int = 1
    # catalog parameters, e.g. {"b": 1.2} for the benchmark plant or
    # {"gains": [2.0, 3.0]} for a diagonal linear plant.
    params: dict[str, typing.Any] = Field(default_factory=dict)
    noise_std: float | list[float] = 1.0
    noise_covariance: Optional[list[list[float]]] = None


class ChannelSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    kind: Literal["noiseless", "erasure", "bsc", "general"] = "noiseless"
    # input alphabet size; None sizes the channel to the codec.
    symbols: Optional[positive_int] = None
    epsilon: probability = 0.0
    crossover: probability = 0.0
    kernel: optional_kernel_matrix = None
    kernel_csv: Optional[str] = None

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "general" and self.kernel is None and self.kernel_csv is None:
            raise ValueError("A general channel needs 'kernel' rows or 'kernel_csv'.")
        if self.kind == "bsc" and self.symbols not in (None, 2):
            raise ValueError("A binary symmetric channel has exactly 2 symbols.")
        return self


class CodecSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    kind: coder_kind = "zoom"
    # K, levels per coordinate.
    levels: level_count = 8
    s: positive_float = 1.0
    zoomout_exp: positive_int = 1
    alpha_exp: positive_int = 1
    floor: positive_float = 1.0
    delta0: Optional[positive_float] = None
    # number of Δ levels a bounded-zoom coder may visit.
    window: positive_int = 8

    @model_validator(mode="after")
    def check_grid(self):
        validators.coprime_exponents(self.zoomout_exp, self.alpha_exp)
        return self

    @property
    def rate_bits(self) -> float:
        return math.log2(self.levels)


class InitialSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    mean: float | list[float] = 0.0
    std: float = 1.0
    # fixed start overriding the Gaussian draw.
    state: Optional[list[float]] = None


class EstimatorSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    select: list[str] = Field(
        default_factory=lambda: ["bounds", "stopping", "drift", "tail", "ams", "escape", "histogram"]
    )
    threshold: threshold_expression = "T"
    escape_times: Optional[time_grid] = None
    inner_draws: positive_int = 16
    burn_in: fraction = 0.5
    drift_floor: Optional[positive_float] = None
    drift_bins: positive_int = 8
    tail_bins: positive_int = 4
    tail_kmax: positive_int = 10
    ams_radii: list[positive_float] = Field(default_factory=lambda: [1.0, 10.0, 100.0])
    ams_boxes: list[box] = Field(default_factory=list)
    ams_min_n: positive_int = 64
    mass_radius: positive_float = 100.0
    histogram_bins: positive_int = 64
    histogram_quantile: fraction = 0.999
    histogram_radius: Optional[positive_float] = None
    entropy_k: positive_int = 4

    @field_validator("select")
    @classmethod
    def check_select(cls, value: list[str]) -> list[str]:
        known = {"bounds", "stopping", "drift", "tail", "ams", "escape", "histogram", "entropy", "transience"}
        if unknown := set(value) - known:
            raise ValueError(f"Unknown estimators: {', '.join(sorted(unknown))}")
        return value


class TransienceSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    starts: list[float] = Field(default_factory=lambda: [2.0, 4.0, 8.0])
    # "control_bound" reads starts and radius in units of U = max |u|.
    scale: Literal["control_bound", "absolute"] = "control_bound"
    radius: positive_float = 1.0
    escape_radius: positive_float = 1e6
    horizon: Optional[positive_int] = None
    replications: Optional[positive_int] = None

    @field_validator("starts")
    @classmethod
    def check_starts(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("Transience scan needs at least one start level.")
        return value


class BodeSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    gain_a: float = 2.0
    # controller gain; None gives the deadbeat choice g = a.
    controller_gain: Optional[float] = None
    sigma_w: float = 0.1
    sigma_v: positive_float = 1.0
    samples: positive_int = 2**20
    burn_in: int = 10_000
    segment: positive_int = 2**12


class ExperimentConfig(CanonicalMixin):
    model_config = pydantic.ConfigDict(extra="forbid")

    hash_exclude: typing.ClassVar[set[str]] = {"output", "workers", "persist_trajectories", "record"}

    name: str = "experiment"
    horizon: positive_int = 1000
    replications: positive_int = 1
    seed: seed64 = 0
    seeds: Optional[list[seed64]] = None
    snapshots: time_grid = Field(default_factory=list)
    workers: positive_int = 1
    output: str = "runs/experiment"
    persist_trajectories: bool = True
    # trajectory arrays kept beyond what the selected estimators read; every
    # array is kept when trajectories are persisted.
    record: list[
        Literal["u", "q", "qprime", "overflow", "erased", "exponent", "decoder_exponent", "delta"]
    ] = Field(default_factory=list)
    divergence_radius: positive_float = 1e100
    chunk: positive_int = 4096

    model: ModelSpec = Field(default_factory=ModelSpec)
    channel: ChannelSpec = Field(default_factory=ChannelSpec)
    codec: CodecSpec = Field(default_factory=CodecSpec)
    initial: InitialSpec = Field(default_factory=InitialSpec)
    estimators: EstimatorSpec = Field(default_factory=EstimatorSpec)
    bode: BodeSpec = Field(default_factory=BodeSpec)
    transience: TransienceSpec = Field(default_factory=TransienceSpec)

    @model_validator(mode="after")
    def check_seeds(self):
        if self.seeds is not None and len(self.seeds) != self.replications:
            raise ValueError(
                f"{len(self.seeds)} explicit seeds given for {self.replications} replications."
            )
        if any(t > self.horizon for t in self.snapshots):
            raise ValueError("Snapshot times cannot exceed the horizon.")
        return self

    def replication_seeds(self) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return [derive_seed(self.seed, i) for i in range(self.replications)]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """
        Return a copy with dotted-path overrides applied, e.g.
        with_overrides(**{"codec.levels": 4}). The result is re-validated.
        """
        data = copy.deepcopy(self.model_dump(mode="python"))
        for path, value in overrides.items():
            if value is None:
                continue
            node = data
            *parents, leaf = path.split(".")
            for part in parents:
                if part not in node or not isinstance(node[part], dict):
                    raise ConfigurationError(f"Unknown config section '{path}'.")
                node = node[part]
            node[leaf] = value
        return load_experiment(data)


def load_experiment(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except pydantic.ValidationError as err:
        raise ConfigurationError(f"Invalid experiment config:\n{err}") from err
