from .ams import (
    BoxSummary,
    CesaroRow,
    CesaroSummary,
    OccupationHistogram,
    ams_cesaro_check,
    box_label,
    cesaro_grid,
    occupation_histogram,
)
from .bode import BodeResult, bode_integral
from .entropy import GrowthFit, entropy_estimate, entropy_growth_rate
from .escape import FractionRow, bounded_box_mass, default_times, escape_probability, wilson
from .stopping import (
    DriftRow,
    DriftSummary,
    StoppingTimeRecord,
    TailBin,
    TailRow,
    TailSummary,
    drift_check,
    stopping_records,
    stopping_times,
    tail_check,
)
from .thresholds import parse_threshold, threshold_function, validate_threshold
from .trajectory import Trajectory, TrajectorySet, as_set
from .transience import TransienceRow, TransienceSummary, transience_scan
