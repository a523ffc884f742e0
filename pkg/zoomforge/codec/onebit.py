from dataclasses import replace

import numpy as np

from zoomforge.shared.errors import ConfigurationError
from .base import Coder
from .coders import certificate_gain
from .zoom import CodecState, ZoomParams


class JayantCoder(Coder):
    """
    One-bit adaptive delta coder for scalar plants. The symbol is the sign of
    x (1 for x < 0, 2 otherwise) and x̂ = ±Δ/2. Δ grows by |a| + δ when the
    received sign repeats and shrinks by α on a sign change while Δ > L.
    An erasure decodes as x̂ = 0 and counts as a repeat.
    """

    kind = "one_bit"

    def __init__(self, model, params: ZoomParams):
        super().__init__(model)
        self.params = params

    @classmethod
    def from_spec(cls, spec, model, initial=None) -> "JayantCoder":
        if model.dimension != 1:
            raise ConfigurationError("The one-bit coder drives scalar plants only.")
        params = ZoomParams.from_spec(spec.model_copy(update={"levels": 2}), 1, certificate_gain(model), initial)
        return cls(model, params)

    @property
    def symbols(self) -> int:
        return 2

    def initial_state(self, side="encoder", count=None):
        state = CodecState.initial(side, count)
        # memory 0 means no sign received yet, so the first received sign
        # never counts as a repeat: it zooms in above the floor and holds Δ
        # at or below it.
        state.memory = np.zeros(np.shape(state.exponent), dtype=np.int64)
        return state

    def delta(self, state):
        return state.delta(self.params)

    def encode(self, x, state):
        x = np.asarray(x, dtype=float)[..., 0]
        symbol = np.where(x < 0.0, 1, 2).astype(np.int64)
        return symbol, np.abs(x) <= state.delta(self.params)

    def decode(self, qprime, state, erased=None):
        qprime = np.asarray(qprime, dtype=np.int64)
        half = 0.5 * state.delta(self.params)
        xhat = np.where(qprime == 1, -half, half)
        if erased is not None:
            xhat = np.where(erased, 0.0, xhat)
        return xhat[..., None]

    def update(self, state, qprime, erased=None):
        qprime = np.asarray(qprime, dtype=np.int64)
        if erased is not None:
            qprime = np.where(erased, 0, qprime)
        repeat = (qprime == state.memory) | (qprime == 0)
        zoom_in = np.where(state.exponent >= self.params.zoom_in_exponent, -self.params.n_in, 0)
        step = np.where(repeat, self.params.n_out, zoom_in)
        return replace(state, exponent=state.exponent + step, time=state.time + 1, memory=qprime)

    def describe(self) -> dict:
        return {"codec_rate": 1.0, "alpha": self.params.alpha, "floor": self.params.floor}
