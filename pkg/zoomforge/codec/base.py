from dataclasses import replace

import numpy as np

import zoomforge
from zoomforge.shared.errors import ConfigurationError
from zoomforge.shared.utils import ensure_registries
from .zoom import CodecState


class Coder:
    """
    Encoder, decoder and controller of one closed loop, vectorised over
    replications. Both sides keep their own CodecState and update it from the
    channel output q′ (the encoder learns q′ over the feedback link), so they
    stay on one grid whatever the channel does.
    """

    kind: str = None
    # True when the coder's memory set S is finite.
    finite_memory: bool = False
    uses_channel: bool = True

    def __init__(self, model):
        self.model = model

    @classmethod
    def from_spec(cls, spec, model, initial=None) -> "Coder":
        return cls(model)

    def __repr__(self):
        return f"<{self.__class__.__name__} symbols={self.symbols}>"

    @property
    def symbols(self) -> int:
        """Channel input symbols the coder needs."""
        return 0

    def initial_state(self, side: str = "encoder", count: int | None = None) -> CodecState:
        return CodecState.initial(side, count)

    def delta(self, state: CodecState) -> np.ndarray:
        return np.full(np.shape(state.exponent), np.nan)

    def encode(self, x: np.ndarray, state: CodecState) -> tuple[np.ndarray, np.ndarray]:
        """(channel symbol, in-range flag) for every replication."""
        raise NotImplementedError

    def decode(self, qprime: np.ndarray, state: CodecState, erased=None) -> np.ndarray:
        """x̂ for every replication."""
        raise NotImplementedError

    def update(self, state: CodecState, qprime: np.ndarray, erased=None) -> CodecState:
        raise NotImplementedError

    def control(self, xhat: np.ndarray) -> np.ndarray:
        return self.model.control(xhat)

    def encoder_step(self, x, state: CodecState, feedback=None, erased=None) -> tuple[np.ndarray, CodecState]:
        """
        (symbol, next encoder state). With feedback the encoder updates from
        the channel output the decoder saw; otherwise from its own symbol.
        """
        q, _ = self.encode(x, state)
        return q, self.update(state, q if feedback is None else feedback, erased)

    def decoder_step(self, qprime, state: CodecState, erased=None) -> tuple[np.ndarray, CodecState]:
        """(control u, next decoder state) for a received symbol."""
        xhat = self.decode(qprime, state, erased)
        return self.control(xhat), self.update(state, qprime, erased)

    def describe(self) -> dict:
        """Rate figures for the bound report."""
        return {}


class OpenLoopCoder(Coder):
    """No channel use and u = 0."""

    kind = "open_loop"
    finite_memory = True
    uses_channel = False

    def encode(self, x, state):
        shape = np.shape(x)[:-1]
        return np.zeros(shape, dtype=np.int64), np.zeros(shape, dtype=bool)

    def decode(self, qprime, state, erased=None):
        return np.zeros(np.shape(qprime) + (self.model.dimension,))

    def update(self, state, qprime, erased=None):
        return replace(state, time=state.time + 1)

    def control(self, xhat):
        return np.zeros_like(xhat)


def build_coder(spec, model, initial=None, channel=None) -> Coder:
    """
    Build the configured coder and check that its codebook fits the channel's
    input alphabet before anything is simulated.
    """
    ensure_registries()
    if not (cls := zoomforge.CODER_CLASSES.get(spec.kind)):
        raise ConfigurationError(f"Unknown codec kind '{spec.kind}'.")
    coder = cls.from_spec(spec, model, initial)
    if channel is not None and coder.uses_channel and coder.symbols > channel.inputs:
        raise ConfigurationError(
            f"{coder!r} needs {coder.symbols} channel symbols (log2 = {np.log2(coder.symbols):.3f} bits) "
            f"but the channel accepts {channel.inputs}."
        )
    return coder
