"""Economic resilience index over annual series split at shock events."""

__version__ = "0.1.0"

from .index import (  # noqa: E402
    ResilienceClass,
    ResilienceRecord,
    ResilienceVector,
    classify,
    compute_record,
    ecological_component,
    engineering_component,
    evolutionary_component,
    scalar_index,
)
from .series import AnnualSeries, NotComputable, ShockEvent, ShockWindow, make_window, split_at_shock  # noqa: E402

__all__ = [
    "AnnualSeries",
    "NotComputable",
    "ResilienceClass",
    "ResilienceRecord",
    "ResilienceVector",
    "ShockEvent",
    "ShockWindow",
    "classify",
    "compute_record",
    "ecological_component",
    "engineering_component",
    "evolutionary_component",
    "make_window",
    "scalar_index",
    "split_at_shock",
]
