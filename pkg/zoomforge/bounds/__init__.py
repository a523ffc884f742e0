from .rates import (
    assess,
    jacobian_entropy_rate,
    linear_rate_bound,
    log_jacobian_range,
    sufficiency_threshold,
    verdicts,
)
from .render import bound_table, capacity_table, render_text, report_lines
