"""Numerical and exact tools for planar vector fields with a topological center.

Period functions and polar lifts live in ``flow`` and ``polar``. Shift functions
of orbit-preserving maps live in ``shift``, first-integral jets in ``jets``."""

from . import cli, fields, flow, jets, linalg, polar, shift
from .errors import CenterKitError
from .fields import PlanarField, ScalarField, catalog, make_field
from .flow import IntegratorConfig, PeriodProfile, flow, period, period_profile
from .polar import LiftedMap, PolarField, lift_field, lift_map
from .shift import ShiftGrid, recover_shift

__all__ = [
    "CenterKitError",
    "IntegratorConfig",
    "LiftedMap",
    "PeriodProfile",
    "PlanarField",
    "PolarField",
    "ScalarField",
    "ShiftGrid",
    "catalog",
    "cli",
    "fields",
    "flow",
    "jets",
    "lift_field",
    "lift_map",
    "linalg",
    "make_field",
    "period",
    "period_profile",
    "polar",
    "recover_shift",
    "shift",
]
