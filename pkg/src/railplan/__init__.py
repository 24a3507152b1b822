"""railplan: renewal-work scheduling and aggregate traffic-flow routing.

The package couples two optimization levels over one instance document:
a mixed-integer program that schedules the work tasks of renewal projects
under resource limits and a traffic-impact proxy, and time-expanded linear
programs that route aggregate train flows under the per-link capacity left
over by the scheduled work.  A fixed-point loop ties the two together by
recalibrating the proxy's coordination weight from measured disruption.
"""

from .datasets import shipped_instance, shipped_instance_text
from .instancefile import (
    InstanceFormatError,
    load_instance,
    parse_instance,
    serialize_instance,
    with_horizon,
)
from .model import (
    CostConfig,
    Instance,
    Network,
    Project,
    Resource,
    TimeHorizon,
    TrafficRelation,
    TrainTypeParams,
    ValidationReport,
    WorkTask,
    per_project_min_blocking,
    project_span_bounds,
    validate_instance,
)

__version__ = "0.1.0"

__all__ = [
    "CostConfig",
    "Instance",
    "InstanceFormatError",
    "Network",
    "Project",
    "Resource",
    "TimeHorizon",
    "TrafficRelation",
    "TrainTypeParams",
    "ValidationReport",
    "WorkTask",
    "load_instance",
    "parse_instance",
    "per_project_min_blocking",
    "project_span_bounds",
    "serialize_instance",
    "shipped_instance",
    "shipped_instance_text",
    "validate_instance",
    "with_horizon",
    "__version__",
]
