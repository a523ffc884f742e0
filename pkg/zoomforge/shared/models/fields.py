from typing import Annotated, Optional
from pydantic import AfterValidator, Field, conint, confloat, constr

from . import validators

name_line = constr(strip_whitespace=True, min_length=1, max_length=255)
optional_name_line = Optional[name_line]

positive_int = conint(ge=1)
level_count = conint(ge=2)
seed64 = conint(ge=0, lt=2**64)
probability = confloat(ge=0.0, le=1.0)
positive_float = confloat(gt=0.0)

threshold_expression = Annotated[str, AfterValidator(validators.threshold_expression)]
kernel_matrix = Annotated[list[list[float]], AfterValidator(validators.stochastic_kernel)]
optional_kernel_matrix = Annotated[
    Optional[list[list[float]]], AfterValidator(validators.optional_stochastic_kernel)
]
time_grid = Annotated[list[conint(ge=0)], AfterValidator(validators.increasing_times)]
box = Annotated[dict[str, list[float]], AfterValidator(validators.box)]
fraction = Annotated[float, Field(gt=0.0, lt=1.0)]
model_name = Annotated[str, AfterValidator(validators.model_name)]
coder_kind = Annotated[str, AfterValidator(validators.coder_kind)]
