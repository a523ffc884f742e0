import numpy as np

from zoomforge.shared.errors import ConfigurationError
from .base import Coder
from .zoom import (
    CodecState,
    ZoomParams,
    decode,
    decoder_step,
    encoder_step,
    received_overflow,
    vector_quantize,
    zoom_exponent_step,
    zoom_update,
)


def certificate_gain(model) -> float:
    if (cert := model.certificate) is None:
        raise ConfigurationError(f"{model!r} has no contraction certificate; the zoom codec needs one.")
    return abs(cert.a)


class ZoomCoder(Coder):
    """
    The adaptive zoom quantizer with the certainty-equivalent control κ(x̂).
    Both sides step through encoder_step/decoder_step of the zoom module;
    subclasses change the memory rule by overriding next_exponent.
    """

    kind = "zoom"

    def __init__(self, model, params: ZoomParams):
        super().__init__(model)
        if params.dimension != model.dimension:
            raise ConfigurationError("Codec and model dimensions differ.")
        self.params = params

    @classmethod
    def from_spec(cls, spec, model, initial=None) -> "ZoomCoder":
        params = ZoomParams.from_spec(spec, model.dimension, certificate_gain(model), initial)
        return cls(model, params)

    @property
    def symbols(self) -> int:
        return self.params.symbols

    def delta(self, state: CodecState) -> np.ndarray:
        return state.delta(self.params)

    def encode(self, x, state):
        symbol, _ = vector_quantize(x, self.params, state)
        return symbol, symbol != self.params.symbols

    def decode(self, qprime, state, erased=None):
        xhat, _ = decode(qprime, state, self.params, erased)
        return xhat

    def next_exponent(self, exponent, overflow):
        return exponent + zoom_exponent_step(overflow, exponent, self.params)

    def update(self, state, qprime, erased=None):
        return zoom_update(state, received_overflow(qprime, self.params, erased), self.params, self.next_exponent)

    def encoder_step(self, x, state, feedback=None, erased=None):
        return encoder_step(x, state, self.params, feedback, erased, self.next_exponent)

    def decoder_step(self, qprime, state, erased=None):
        return decoder_step(qprime, state, self.params, self.model, erased, self.next_exponent)

    def describe(self) -> dict:
        p = self.params
        return {
            "codec_rate": p.channel_rate,
            "zoom_ratio": p.zoom_ratio,
            "rate_condition": p.rate_condition,
            "alpha": p.alpha,
            "floor": p.floor,
            "delta0": p.delta0,
        }
