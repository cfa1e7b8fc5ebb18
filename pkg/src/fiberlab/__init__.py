"""Numerical checks for circle-fibering geometry at desk scale.

Subpackages cover sampled circle diffeomorphisms and their heat-flow
retraction, additive cocycle algebra over fixed covers with total-space
classification, Riemannian fibration geometry for four model spaces,
vector-field splitting into fair and projectable parts, fiber families with
center-of-mass straightening, and curve-shortening flow on flat tori.
"""

from __future__ import annotations

__version__ = "0.1.0"

from . import cech, circle_diffeo, csf, errors, fields, geometry, moduli
from .cech import classify, euler_class
from .circle_diffeo import CircleDiffeo, retract
from .csf import CurveState, flow_fibering, flow_until
from .errors import FiberlabError
from .fields import FieldGrid, split_field
from .geometry import get_model
from .moduli import (
    Fibering,
    FiberShape,
    core_membership,
    fiber_center,
    model_fibering,
    refine,
    slope,
    slope_fibering,
    straighten,
)

__all__ = [
    "CircleDiffeo",
    "CurveState",
    "FiberShape",
    "Fibering",
    "FieldGrid",
    "FiberlabError",
    "__version__",
    "cech",
    "circle_diffeo",
    "classify",
    "core_membership",
    "csf",
    "errors",
    "euler_class",
    "fiber_center",
    "fields",
    "flow_fibering",
    "flow_until",
    "geometry",
    "get_model",
    "model_fibering",
    "moduli",
    "refine",
    "retract",
    "slope",
    "slope_fibering",
    "split_field",
    "straighten",
]
