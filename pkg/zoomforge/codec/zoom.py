import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import pydantic
from scipy import stats

from zoomforge.shared.errors import ConfigurationError
from .quantizer import decode_symbol, normalized, overflow_symbol, quantize_vector


class ZoomParams(pydantic.BaseModel):
    """
    Parameters of the adaptive zoom quantizer. Δ lives on the grid
    Δ_0 2^{g s}: overflow moves g up by n_out, an in-range step with Δ > L
    moves it down by n_in, otherwise g stays.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    levels: int
    dimension: int = 1
    s: float = 1.0
    n_out: int = 1
    n_in: int = 1
    floor: float = 1.0
    delta0: float = 1.0
    # |a| of the plant's contraction certificate.
    a: float = 1.0

    @pydantic.model_validator(mode="after")
    def check(self):
        if self.levels < 2:
            raise ValueError("The zoom quantizer needs K >= 2.")
        if self.s <= 0 or self.floor <= 0 or self.delta0 <= 0:
            raise ValueError("s, L and Δ_0 must be positive.")
        if math.gcd(self.n_out, self.n_in) != 1:
            raise ValueError(f"n_out={self.n_out} and n_in={self.n_in} must be relatively prime.")
        if self.zoom_out <= abs(self.a):
            raise ValueError(
                f"Zoom-out factor 2^(n_out s) = {self.zoom_out:g} must exceed |a| = {abs(self.a):g}."
            )
        if self.delta0 < self.alpha * self.floor:
            raise ValueError(f"Δ_0 = {self.delta0:g} is below the floor αL = {self.alpha * self.floor:g}.")
        return self

    @classmethod
    def from_spec(cls, spec, dimension: int, a: float, initial=None) -> "ZoomParams":
        delta0 = spec.delta0
        if delta0 is None:
            delta0 = max(default_delta0(spec.levels, dimension, initial), spec.floor)
        try:
            return cls(
                levels=spec.levels,
                dimension=dimension,
                s=spec.s,
                n_out=spec.zoomout_exp,
                n_in=spec.alpha_exp,
                floor=spec.floor,
                delta0=delta0,
                a=a,
            )
        except pydantic.ValidationError as err:
            raise ConfigurationError(f"Invalid zoom parameters:\n{err}") from err

    @property
    def zoom_out(self) -> float:
        """|a| + δ."""
        return 2.0 ** (self.n_out * self.s)

    @property
    def alpha(self) -> float:
        return 2.0 ** (-self.n_in * self.s)

    @property
    def rate_bits(self) -> float:
        """R' = log2 K per coordinate."""
        return math.log2(self.levels)

    @property
    def symbols(self) -> int:
        return overflow_symbol(self.levels, self.dimension)

    @property
    def channel_rate(self) -> float:
        return math.log2(self.symbols)

    @property
    def zoom_ratio(self) -> float:
        return abs(self.a) / self.alpha

    @property
    def rate_condition(self) -> bool:
        return self.levels > self.zoom_ratio

    @cached_property
    def zoom_in_exponent(self) -> int:
        """Smallest grid exponent g with Δ_0 2^{g s} > L."""
        g = math.floor(math.log2(self.floor / self.delta0) / self.s)
        while self.delta(g) <= self.floor:
            g += 1
        while self.delta(g - 1) > self.floor:
            g -= 1
        return g

    @property
    def floor_exponent(self) -> int:
        """Lowest exponent the zoom can reach; its Δ is at least αL."""
        return min(0, self.zoom_in_exponent - self.n_in)

    def delta(self, exponent) -> np.ndarray:
        return self.delta0 * np.exp2(np.asarray(exponent, dtype=float) * self.s)


def default_delta0(levels: int, dimension: int, initial=None) -> float:
    """
    Δ_0 with |h_0| <= 1 at the 99th percentile of max_i |x_0^i| under the
    configured Gaussian start.
    """
    if initial is None:
        return 1.0
    if initial.state is not None:
        radius = float(np.max(np.abs(initial.state)))
    else:
        mean = float(np.max(np.abs(np.atleast_1d(initial.mean))))
        radius = mean + initial.std * float(stats.norm.ppf(1.0 - 0.005 / dimension))
    return max(2.0 * radius / levels, 1e-12)


@dataclass(slots=True)
class CodecState:
    """Grid exponent of Δ (per replication when batched), time and side."""

    exponent: np.ndarray
    time: int = 0
    side: str = "encoder"
    # coder-specific extra memory, e.g. the last received sign.
    memory: np.ndarray | None = None

    @classmethod
    def initial(cls, side: str = "encoder", count: int | None = None) -> "CodecState":
        shape = () if count is None else (count,)
        return cls(np.zeros(shape, dtype=np.int64), 0, side)

    def delta(self, params: ZoomParams) -> np.ndarray:
        return params.delta(self.exponent)

    def same_grid(self, other: "CodecState") -> bool:
        if self.time != other.time or not np.array_equal(self.exponent, other.exponent):
            return False
        return (self.memory is None and other.memory is None) or np.array_equal(self.memory, other.memory)


def vector_quantize(x, params: ZoomParams, state: CodecState):
    """
    (symbol in 1..K^N + 1, x̂) for x at the state's shared Δ. Symbol K^N + 1
    is overflow, with x̂ = 0.
    """
    return quantize_vector(x, params.levels, state.delta(params))


def zoom_factor(h_max, delta_min, params: ZoomParams):
    """
    |a| + δ on overflow, α in range above the floor L, 1 in range at or below it.
    """
    h_max = np.asarray(h_max, dtype=float)
    delta_min = np.asarray(delta_min, dtype=float)
    out = np.where(h_max > 1.0, params.zoom_out, np.where(delta_min > params.floor, params.alpha, 1.0))
    return float(out) if out.ndim == 0 else out


def zoom_exponent_step(overflow, exponent, params: ZoomParams) -> np.ndarray:
    """The zoom update on the grid: log2 of zoom_factor divided by s."""
    exponent = np.asarray(exponent, dtype=np.int64)
    zoom_in = np.where(exponent >= params.zoom_in_exponent, -params.n_in, 0)
    return np.where(np.asarray(overflow, dtype=bool), params.n_out, zoom_in).astype(np.int64)


def zoom_update(state: CodecState, overflow, params: ZoomParams, next_exponent=None) -> CodecState:
    """
    Advance time and move the grid exponent by the zoom rule, or by
    next_exponent(exponent, overflow) for coders that bound their memory.
    """
    if next_exponent is None:
        exponent = state.exponent + zoom_exponent_step(overflow, state.exponent, params)
    else:
        exponent = next_exponent(state.exponent, overflow)
    return replace(state, exponent=exponent, time=state.time + 1)


def received_overflow(qprime, params: ZoomParams, erased=None) -> np.ndarray:
    """Overflow as seen through the channel: the overflow symbol or an erasure."""
    overflow = np.asarray(qprime) == params.symbols
    if erased is not None:
        overflow = overflow | np.asarray(erased, dtype=bool)
    return overflow


def encoder_step(x, state: CodecState, params: ZoomParams, feedback=None, erased=None, next_exponent=None):
    """
    Quantize x with the current Δ and zoom. Without feedback the encoder zooms
    on its own overflow test; with the channel output fed back it zooms on
    what the decoder received, so erasures keep both sides on one grid.
    """
    symbol, _ = vector_quantize(x, params, state)
    if feedback is None:
        overflow = symbol == params.symbols
    else:
        overflow = received_overflow(feedback, params, erased)
    return symbol, zoom_update(state, overflow, params, next_exponent)


def decode(qprime, state: CodecState, params: ZoomParams, erased=None):
    """
    x̂ and the overflow flag for a received symbol. Erased outputs decode as
    overflow: x̂ = 0 and a zoom-out.
    """
    qprime = np.asarray(qprime, dtype=np.int64)
    if erased is not None:
        qprime = np.where(np.asarray(erased, dtype=bool), params.symbols, qprime)
    xhat, overflow = decode_symbol(qprime, params.levels, params.dimension, state.delta(params))
    return xhat, overflow


def decoder_step(qprime, state: CodecState, params: ZoomParams, model, erased=None, next_exponent=None):
    """Reconstruct x̂, apply the contraction control and zoom like the encoder."""
    xhat, overflow = decode(qprime, state, params, erased)
    return model.control(xhat), zoom_update(state, overflow, params, next_exponent)


def h_max(x, state: CodecState, params: ZoomParams) -> np.ndarray:
    return np.max(np.abs(normalized(x, params.levels, state.delta(params))), axis=-1)
