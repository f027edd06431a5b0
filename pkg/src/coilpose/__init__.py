"""Simulation and estimation suite for 6DoF planar-coil magnetic positioning."""

__version__ = "0.1.0"

from .fieldmodel import (
    MU0,
    MU0_OVER_4PI,
    BeaconSet,
    Coil,
    DipoleMoment,
    FieldModelError,
    MobilePose,
    dipole_field,
    dipole_moment,
    forward_vrms,
    induced_vrms,
    vrms_profile,
)

__all__ = [
    "MU0",
    "MU0_OVER_4PI",
    "BeaconSet",
    "Coil",
    "DipoleMoment",
    "FieldModelError",
    "MobilePose",
    "dipole_field",
    "dipole_moment",
    "forward_vrms",
    "induced_vrms",
    "vrms_profile",
    "__version__",
]
