from .base import (
    ContractionCertificate,
    Form,
    ModelCheck,
    SystemModel,
    check_model,
    finite_difference_jacobian,
    log_jacobian,
    step,
)
from .catalog import BenchmarkPlant, ExpandingScalar, LinearModel, ModulatedGain, build_model
from .noise import NoiseStream, noise_factor, sample_noise
