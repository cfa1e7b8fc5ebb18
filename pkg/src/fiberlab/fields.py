"""Vector fields sampled along the fibers of a model fibration.

A field is stored on a grid of shape (fibers, samples per fiber, ambient dim)
whose rows are uniformly spaced loops inside single fibers.  Uniform loops make
the normalized periodic trapezoid rule collapse to a plain mean, so every
fiber average below is a mean over axis 1.

The central operation is the splitting of a field X into

* its projectable shadow r(X): the vertical part of X plus the horizontal
  lift of the fiber-averaged pushforward, and
* the fair remainder X - r(X), whose pushforward has zero fiber average.

For uniform grids the remainder is L2-orthogonal to every field whose
pushforward is constant along each fiber, which is the discrete form of the
splitting used throughout the moduli routines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BadConfig, NotTangent, UnsupportedBase
from .geometry import get_model, qmul

__all__ = [
    "FieldGrid",
    "model_points",
    "field_from_function",
    "vertical_field",
    "hopf_right_frame",
    "is_projectable",
    "horizontal_center",
    "split_field",
    "l2_inner",
    "l2_norm",
    "finite_difference_bracket",
]

_TANGENCY_TOL = 1e-10


def model_points(model, nb: int, nf: int) -> np.ndarray:
    """Grid of model fibers over the model's deterministic base grid."""
    if isinstance(model, str):
        model = get_model(model)
    bases = model.base_grid(nb)
    return np.stack([model.model_fiber(x, nf) for x in bases])


@dataclass
class FieldGrid:
    """A tangent vector per grid point, plus an optional analytic generator.

    ``func`` maps an (..., ambient) point array to tangent vectors; it is kept
    when known so flows can re-evaluate the field off the original grid.
    """

    model_name: str
    points: np.ndarray
    vectors: np.ndarray
    func: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.points.ndim != 3 or self.points.shape != self.vectors.shape:
            raise BadConfig(
                "field grids are (fibers, samples, ambient) with matching vectors"
            )
        model = self.model
        if self.points.shape[-1] != model.ambient_dim:
            raise BadConfig(f"{model.name} points have {model.ambient_dim} coordinates")
        if not model.name.startswith("flat"):
            radial = np.abs(np.sum(self.points * self.vectors, axis=-1))
            if np.max(radial) > _TANGENCY_TOL * max(1.0, np.max(np.abs(self.vectors))):
                raise NotTangent("field has a radial component somewhere on the grid")

    @property
    def model(self):
        return get_model(self.model_name)

    @property
    def shape(self) -> tuple:
        return self.points.shape[:2]

    # pointwise pieces -------------------------------------------------------

    def vertical_part(self) -> "FieldGrid":
        model = self.model
        vu = model.vertical_unit(self.points)
        coef = np.sum(self.vectors * vu, axis=-1, keepdims=True)
        return FieldGrid(self.model_name, self.points, coef * vu)

    def horizontal_part(self) -> "FieldGrid":
        vert = self.vertical_part()
        return FieldGrid(self.model_name, self.points, self.vectors - vert.vectors)

    def pushforward(self) -> np.ndarray:
        """dproj applied pointwise, shape (fibers, samples, base dim)."""
        return self.model.dproj(self.points, self.vectors)

    def base_points(self) -> np.ndarray:
        """One base point per fiber, taken from the first sample."""
        return self.model.project(self.points[:, 0])

    # algebra ------------------------------------------------------------------

    def __add__(self, other: "FieldGrid") -> "FieldGrid":
        self._check_same_grid(other)
        return FieldGrid(self.model_name, self.points, self.vectors + other.vectors)

    def __sub__(self, other: "FieldGrid") -> "FieldGrid":
        self._check_same_grid(other)
        return FieldGrid(self.model_name, self.points, self.vectors - other.vectors)

    def __mul__(self, c: float) -> "FieldGrid":
        return FieldGrid(self.model_name, self.points, float(c) * self.vectors)

    __rmul__ = __mul__

    def _check_same_grid(self, other: "FieldGrid") -> None:
        if self.model_name != other.model_name or self.points.shape != other.points.shape:
            raise BadConfig("fields live on different grids")
        if not np.array_equal(self.points, other.points):
            raise BadConfig("fields live on different grids")

    # serialization ---------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "model": self.model_name,
            "points": self.points.tolist(),
            "vectors": self.vectors.tolist(),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "FieldGrid":
        try:
            return cls(payload["model"], np.array(payload["points"], dtype=float),
                       np.array(payload["vectors"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise BadConfig(f"malformed field payload: {exc}") from exc


def field_from_function(model, points, func: Callable) -> FieldGrid:
    """Sample an analytic field on a grid, keeping the generator attached."""
    if isinstance(model, str):
        model = get_model(model)
    points = np.asarray(points, dtype=float)
    vectors = np.asarray(func(points), dtype=float)
    return FieldGrid(model.name, points, vectors, func=func)


def vertical_field(model, points, profile: Optional[Callable] = None) -> FieldGrid:
    """A field tangent to the fibers, optionally scaled per point."""
    if isinstance(model, str):
        model = get_model(model)
    points = np.asarray(points, dtype=float)

    def func(pts):
        vu = model.vertical_unit(pts)
        if profile is None:
            return vu
        return np.asarray(profile(pts))[..., None] * vu

    return field_from_function(model, points, func)


def hopf_right_frame(points) -> tuple[FieldGrid, FieldGrid]:
    """The two horizontal right-translation fields p j and p k on the 3-sphere.

    Both are pointwise orthogonal to the fiber direction p i, but neither is
    projectable: their pushforwards rotate twice per fiber loop.
    """
    j = np.array([0.0, 0.0, 1.0, 0.0])
    k = np.array([0.0, 0.0, 0.0, 1.0])
    fj = field_from_function("hopf", points, lambda pts: qmul(pts, j))
    fk = field_from_function("hopf", points, lambda pts: qmul(pts, k))
    return fj, fk


# --- splitting ----------------------------------------------------------------------


def is_projectable(grid: FieldGrid, tol: float = 1e-6) -> tuple[bool, float]:
    """Whether the pushforward is constant along each fiber, with the spread."""
    push = grid.pushforward()
    centers = push.mean(axis=1, keepdims=True)
    model = grid.model
    bases = grid.base_points()[:, None]
    spread = model.base_norm(bases, push - centers)
    worst = float(np.max(spread)) if spread.size else 0.0
    return worst < tol, worst


def horizontal_center(grid: FieldGrid) -> np.ndarray:
    """Fiber-averaged pushforward, one base tangent vector per fiber."""
    push = grid.pushforward().mean(axis=1)
    model = grid.model
    return model.base_tangent_project(grid.base_points(), push)


def split_field(grid: FieldGrid) -> tuple[FieldGrid, FieldGrid]:
    """Projectable shadow and fair remainder of a field."""
    model = grid.model
    centers = horizontal_center(grid)
    lift = model.horizontal_lift_vec(grid.points, centers[:, None]).vector
    shadow_vecs = grid.vertical_part().vectors + lift
    shadow = FieldGrid(grid.model_name, grid.points, shadow_vecs)
    fair = FieldGrid(grid.model_name, grid.points, grid.vectors - shadow_vecs)
    return shadow, fair


def l2_inner(a: FieldGrid, b: FieldGrid) -> float:
    """L2 pairing under the uniform product measure on the grid."""
    a._check_same_grid(b)
    dots = a.model.total_inner(a.points, a.vectors, b.vectors)
    return float(dots.mean())


def l2_norm(a: FieldGrid) -> float:
    return float(np.sqrt(max(l2_inner(a, a), 0.0)))


# --- analysis helpers -----------------------------------------------------------------


def finite_difference_bracket(model, fx: Callable, fy: Callable, points,
                              eps: float = 1e-5) -> FieldGrid:
    """Central-difference Lie bracket [X, Y] of two analytic fields.

    Supported on the flat models, where straight-line increments stay in the
    manifold; the funcs must accept arbitrary real coordinates (periodic
    formulas do).
    """
    if isinstance(model, str):
        model = get_model(model)
    if not model.name.startswith("flat"):
        raise UnsupportedBase("finite-difference brackets need a flat model")
    points = np.asarray(points, dtype=float)

    def jac_apply(f, direction):
        return (np.asarray(f(points + eps * direction))
                - np.asarray(f(points - eps * direction))) / (2.0 * eps)

    bracket = jac_apply(fy, np.asarray(fx(points))) - jac_apply(fx, np.asarray(fy(points)))
    return FieldGrid(model.name, points, bracket)
