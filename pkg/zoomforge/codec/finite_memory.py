import numpy as np

from zoomforge.shared.errors import ConfigurationError
from .coders import ZoomCoder, certificate_gain
from .quantizer import cell_of_symbol, reconstruction
from .zoom import CodecState, ZoomParams


class FiniteMemoryCoder(ZoomCoder):
    """
    A zoom-style coder whose memory m (the Δ grid exponent) ranges over a
    finite set S. γᵉ(x, m) is the quantizer at Δ(m), γᵈ(m, q′) its
    reconstruction and η(m, q′) the memory update.
    """

    finite_memory = True

    @property
    def memory_states(self) -> list[int]:
        raise NotImplementedError

    @property
    def control_bound(self) -> float:
        """U = max |u| over every memory state and cell of the codebook."""
        p = self.params
        cells = cell_of_symbol(np.arange(1, p.symbols), p.levels, p.dimension)
        bound = 0.0
        for m in self.memory_states:
            xhat = reconstruction(cells, p.levels, p.delta(m))
            bound = max(bound, float(np.max(np.abs(self.control(xhat)))))
        return bound

    def describe(self) -> dict:
        return {"codec_rate": self.params.channel_rate, "memory_states": len(self.memory_states)}


class FixedQuantizerCoder(FiniteMemoryCoder):
    """|S| = 1: a fixed uniform quantizer at Δ_0."""

    kind = "fixed"

    @classmethod
    def from_spec(cls, spec, model, initial=None) -> "FixedQuantizerCoder":
        certificate_gain(model)
        # Δ never moves, so the zoom-out factor is not checked against |a|.
        params = ZoomParams.from_spec(spec, model.dimension, 0.0, initial)
        return cls(model, params)

    @property
    def memory_states(self) -> list[int]:
        return [0]

    def next_exponent(self, exponent, overflow):
        return np.asarray(exponent, dtype=np.int64).copy()


class BoundedZoomCoder(FiniteMemoryCoder):
    """The zoom coder with its grid exponent held inside `window` levels."""

    kind = "bounded_zoom"

    def __init__(self, model, params: ZoomParams, window: int = 8):
        super().__init__(model, params)
        if window < 1:
            raise ConfigurationError("A bounded zoom needs a window of at least one level.")
        self.window = window
        self.lowest = params.floor_exponent

    @classmethod
    def from_spec(cls, spec, model, initial=None) -> "BoundedZoomCoder":
        params = ZoomParams.from_spec(spec, model.dimension, certificate_gain(model), initial)
        return cls(model, params, spec.window)

    @property
    def memory_states(self) -> list[int]:
        return list(range(self.lowest, self.lowest + self.window))

    def next_exponent(self, exponent, overflow):
        return np.clip(super().next_exponent(exponent, overflow), self.lowest, self.lowest + self.window - 1)


def finite_memory_step(x, coder: FiniteMemoryCoder, memory: int = 0) -> tuple[np.ndarray, int]:
    """
    One noiseless round of a finite-memory coder: q = γᵉ(x, m),
    u = κ(γᵈ(m, q)), m⁺ = η(m, q).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    state = CodecState(np.asarray(memory, dtype=np.int64), side="decoder")
    q, _ = coder.encode(x, state)
    u = coder.control(coder.decode(q, state))
    return u, int(coder.update(state, q).exponent)
