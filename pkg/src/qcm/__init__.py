"""Error metrics of quantum channels with certified diamond distances."""

from .channels import (
    Channel,
    WeylChannel,
    amplitude_damping,
    depolarizing,
    identity_channel,
    pauli_channel,
    random_cptp,
    unitary_channel,
    validate_cptp,
    weyl_twirl,
)
from .diamond import DiamondResult, diamond_distance, diamond_norm
from .metrics import MetricsReport, infidelity, metrics_report, unitarity
from .validation import DimensionError, NotCPTPError, PreconditionError, SolverError

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "DiamondResult",
    "DimensionError",
    "MetricsReport",
    "NotCPTPError",
    "PreconditionError",
    "SolverError",
    "WeylChannel",
    "amplitude_damping",
    "depolarizing",
    "diamond_distance",
    "diamond_norm",
    "identity_channel",
    "infidelity",
    "metrics_report",
    "pauli_channel",
    "random_cptp",
    "unitarity",
    "unitary_channel",
    "validate_cptp",
    "weyl_twirl",
]
