from .base import Coder, OpenLoopCoder, build_coder
from .coders import ZoomCoder
from .finite_memory import BoundedZoomCoder, FiniteMemoryCoder, FixedQuantizerCoder, finite_memory_step
from .onebit import JayantCoder
from .quantizer import decode_symbol, quantize_vector, uniform_quantize
from .zoom import CodecState, ZoomParams, decoder_step, encoder_step, vector_quantize, zoom_factor
