"""Riemannian circle-fibration geometry for four model total spaces.

Models
------
``flat2``
    T^2 -> S^1, unit square coordinates, fiber is the second coordinate.
``flat3``
    T^3 -> T^2, fiber is the third coordinate.
``hopf``
    S^3 -> S^2 through q |-> q i conj(q) on unit quaternions.  Fibers are the
    left cosets q T of the circle subgroup T = {exp(i theta)}, so the vertical
    direction at q is q i (the derivative of q exp(i theta)).
``lens<e>``
    The quotient of the Hopf model by right multiplication with
    exp(2 pi i / e); points are stored as canonical unit-quaternion
    representatives and distances minimize over the deck orbit.

Conventions for the sphere base: points are unit 3-vectors, and geodesics,
logarithms, and distances use the unit-sphere angle parametrization (the
closed form cos(|v| t) x + sin(|v| t) v_hat).  The fibration metric on the
base is the half-radius round metric, exposed through ``base_inner`` and
``base_norm``; with that scaling the differential of the projection is an
exact isometry on horizontal vectors.  Guards are expressed in angle units.

Quaternions are stored scalar-first as [w, x, y, z]; all helpers broadcast
over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BaseMismatch,
    BeyondInjectivityRadius,
    NonconvergedODE,
    NotTangent,
    UnsupportedBase,
)

__all__ = [
    "qmul",
    "qconj",
    "qnormalize",
    "quat_exp_i",
    "TangentSplit",
    "FlatTorusOverCircle",
    "FlatTorus3OverTorus",
    "HopfModel",
    "LensModel",
    "get_model",
    "MODEL_NAMES",
]

_TANGENCY_TOL = 1e-9


# --- quaternion helpers -------------------------------------------------------


def qmul(a, b) -> np.ndarray:
    """Hamilton product, scalar-first, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = np.moveaxis(a, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def qconj(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnormalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_exp_i(theta) -> np.ndarray:
    """exp(i theta) as a quaternion array, broadcasting over theta."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (4,))
    out[..., 0] = np.cos(theta)
    out[..., 1] = np.sin(theta)
    return out


def _pure(v) -> np.ndarray:
    """Embed 3-vectors as pure-imaginary quaternions."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (4,))
    out[..., 1:] = v
    return out


def _sphere_angle(x, y) -> np.ndarray:
    """Angle between unit vectors, accurate near 0 and pi.

    arccos of a dot product loses half the working digits at both ends of its
    range; the half-angle form below resolves angles down to roundoff.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.linalg.norm(x - y, axis=-1)
    s = np.linalg.norm(x + y, axis=-1)
    return 2.0 * np.arctan2(d, s)


@dataclass(frozen=True)
class TangentSplit:
    """A tangent vector with its cached vertical and horizontal parts."""

    point: np.ndarray
    vector: np.ndarray
    vertical: np.ndarray
    horizontal: np.ndarray


def _wrap(x) -> np.ndarray:
    return np.asarray(x, dtype=float) % 1.0


def _wrap_diff(a, b) -> np.ndarray:
    """Shortest representative of a - b on the torus, componentwise."""
    return (np.asarray(a, float) - np.asarray(b, float) + 0.5) % 1.0 - 0.5


# --- flat models ---------------------------------------------------------------


class _FlatModel:
    """Shared arithmetic for the two flat torus fibrations."""

    name: str
    euler = 0
    ambient_dim: int
    base_ambient_dim: int
    fiber_period = 1.0
    #: angle-unit guards; flat tori have injectivity radius one half
    injectivity_guard = 0.45
    convex_ball_guard = 0.25
    tube_guard = 0.25

    # points ---------------------------------------------------------------

    def canonicalize(self, p) -> np.ndarray:
        return _wrap(p)

    def validate_point(self, p) -> None:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.ambient_dim:
            raise NotTangent(
                f"{self.name} points have {self.ambient_dim} coordinates"
            )

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 1.0, self.ambient_dim)

    def tangent_project(self, p, w) -> np.ndarray:
        return np.asarray(w, dtype=float)

    def check_tangent(self, p, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != self.ambient_dim:
            raise NotTangent(
                f"{self.name} tangents have {self.ambient_dim} coordinates"
            )
        return w

    # projection -----------------------------------------------------------

    def project(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return _wrap(p[..., : self.base_ambient_dim])

    def dproj(self, p, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return w[..., : self.base_ambient_dim].copy()

    def vertical_unit(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1] + (self.ambient_dim,))
        out[..., -1] = 1.0
        return out

    def split_tangent(self, p, w) -> TangentSplit:
        w = self.check_tangent(p, w)
        vert = np.zeros_like(w)
        vert[..., -1] = w[..., -1]
        return TangentSplit(np.asarray(p, float), w, vert, w - vert)

    # base geometry ----------------------------------------------------------

    def base_canonicalize(self, x) -> np.ndarray:
        return _wrap(x)

    def base_tangent_project(self, x, v) -> np.ndarray:
        return np.asarray(v, dtype=float)

    def base_distance(self, x, y) -> np.ndarray:
        d = _wrap_diff(x, y)
        return np.linalg.norm(d, axis=-1)

    def base_log(self, x, y) -> np.ndarray:
        d = _wrap_diff(y, x)
        if np.any(np.linalg.norm(d, axis=-1) >= 0.499):
            raise BeyondInjectivityRadius(
                "base points nearly half a period apart have no preferred segment"
            )
        return d

    def base_geodesic(self, x, v, t: float = 1.0) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if np.any(np.linalg.norm(v * t, axis=-1) >= self.injectivity_guard):
            raise BeyondInjectivityRadius(
                f"flat geodesic step leaves the {self.injectivity_guard} guard"
            )
        return _wrap(np.asarray(x, float) + t * v)

    def base_inner(self, x, u, v) -> np.ndarray:
        return np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)

    def base_norm(self, x, v) -> np.ndarray:
        return np.sqrt(self.base_inner(x, v, v))

    def random_base(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 1.0, self.base_ambient_dim)

    def random_base_tangent(self, rng: np.random.Generator, x) -> np.ndarray:
        return rng.normal(size=self.base_ambient_dim)

    # total-space metric -------------------------------------------------------

    def total_inner(self, p, u, v) -> np.ndarray:
        return np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)

    def total_norm(self, p, v) -> np.ndarray:
        return np.sqrt(self.total_inner(p, v, v))

    def total_distance(self, p, q) -> np.ndarray:
        return np.linalg.norm(_wrap_diff(p, q), axis=-1)

    # fibration operations ------------------------------------------------------

    def horizontal_lift_vec(self, p, v) -> TangentSplit:
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.base_ambient_dim:
            raise BaseMismatch(
                f"{self.name} base tangents have {self.base_ambient_dim} coordinates"
            )
        lift = np.zeros(np.broadcast_shapes(p.shape[:-1], v.shape[:-1]) + (self.ambient_dim,))
        lift[..., : self.base_ambient_dim] = v
        return TangentSplit(p, lift, np.zeros_like(lift), lift)

    def horizontal_transport(self, q, x_target, tol: float = 1e-9) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        x_target = np.asarray(x_target, dtype=float)
        if self.base_distance(self.project(q), x_target).max() >= self.injectivity_guard:
            raise BeyondInjectivityRadius("transport target outside the geodesic guard")
        out = q.copy()
        out[..., : self.base_ambient_dim] = x_target
        return _wrap(out)

    def fiber_shift(self, p, theta) -> np.ndarray:
        p = np.asarray(p, dtype=float).copy()
        p[..., -1] = p[..., -1] + np.asarray(theta, float)
        return _wrap(p)

    def adapted_exp(self, p, w) -> np.ndarray:
        w = self.check_tangent(p, w)
        split = self.split_tangent(p, w)
        mid = self.fiber_shift(p, split.vertical[..., -1])
        wbar = self.dproj(p, w)
        target = self.base_geodesic(self.project(p), wbar, 1.0)
        return self.horizontal_transport(mid, target)

    # sampling helpers ------------------------------------------------------------

    def section(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.ambient_dim,))
        out[..., : self.base_ambient_dim] = _wrap(x)
        return out

    def model_fiber(self, x, m: int) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.arange(m) / m
        pts = np.zeros((m, self.ambient_dim))
        pts[:, : self.base_ambient_dim] = x
        pts[:, -1] = t
        return pts

    def base_grid(self, nb: int) -> np.ndarray:
        if self.base_ambient_dim == 1:
            return (np.arange(nb) / nb)[:, None]
        g = int(round(nb ** 0.5))
        if g * g != nb:
            raise BaseMismatch(f"{self.name} base grids need a square node count, got {nb}")
        xs = np.arange(g) / g
        return np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1).reshape(-1, 2)

    def sample_automorphism(self, rng: np.random.Generator) -> "Automorphism":
        shift = rng.uniform(0.0, 1.0, self.ambient_dim)

        def apply(pts):
            return _wrap(np.asarray(pts, float) + shift)

        def base_apply(xs):
            return _wrap(np.asarray(xs, float) + shift[: self.base_ambient_dim])

        return Automorphism(f"translate({shift.round(3)})", apply, base_apply)


class FlatTorusOverCircle(_FlatModel):
    name = "flat2"
    ambient_dim = 2
    base_ambient_dim = 1


class FlatTorus3OverTorus(_FlatModel):
    name = "flat3"
    ambient_dim = 3
    base_ambient_dim = 2


@dataclass(frozen=True)
class Automorphism:
    """A sampled structure-preserving map of a model fibration."""

    label: str
    apply: callable
    base_apply: callable


# --- sphere models ---------------------------------------------------------------


class HopfModel:
    name = "hopf"
    euler = 1
    ambient_dim = 4
    base_ambient_dim = 3
    fiber_period = 2.0 * np.pi
    #: base guards in angle units; injectivity radius pi, convexity pi/2
    injectivity_guard = 0.9 * np.pi
    convex_ball_guard = 0.45 * np.pi
    #: normal projection onto a great-circle fiber degenerates at angle pi/2
    tube_guard = 0.45 * np.pi
    deck_order = 1

    # points -------------------------------------------------------------------

    def canonicalize(self, p) -> np.ndarray:
        return qnormalize(p)

    def validate_point(self, p) -> None:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != 4:
            raise NotTangent("total-space points are unit quaternions")
        if np.any(np.abs(np.linalg.norm(p, axis=-1) - 1.0) > 1e-9):
            raise NotTangent("total-space point is not on the unit sphere")

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return qnormalize(rng.normal(size=4))

    def tangent_project(self, p, w) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        w = np.asarray(w, dtype=float)
        return w - np.sum(w * p, axis=-1, keepdims=True) * p

    def check_tangent(self, p, w) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        w = np.asarray(w, dtype=float)
        scale = np.maximum(1.0, np.linalg.norm(w, axis=-1))
        if np.any(np.abs(np.sum(w * p, axis=-1)) > _TANGENCY_TOL * scale):
            raise NotTangent("vector has a radial component at this point")
        return w

    # projection ------------------------------------------------------------------

    def project(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        w, x, y, z = np.moveaxis(p, -1, 0)
        return np.stack(
            [
                w * w + x * x - y * y - z * z,
                2.0 * (x * y + w * z),
                2.0 * (x * z - w * y),
            ],
            axis=-1,
        )

    def dproj(self, p, w) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        w = np.asarray(w, dtype=float)
        i = np.array([0.0, 1.0, 0.0, 0.0])
        term = qmul(qmul(w, i), qconj(p)) + qmul(qmul(p, i), qconj(w))
        return term[..., 1:]

    def vertical_unit(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        w, x, y, z = np.moveaxis(p, -1, 0)
        return np.stack([-x, w, z, -y], axis=-1)  # p * i

    def split_tangent(self, p, w) -> TangentSplit:
        w = self.check_tangent(p, w)
        vu = self.vertical_unit(p)
        coef = np.sum(w * vu, axis=-1, keepdims=True)
        vert = coef * vu
        return TangentSplit(np.asarray(p, float), w, vert, w - vert)

    # base geometry ------------------------------------------------------------------

    def base_canonicalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def base_tangent_project(self, x, v) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return v - np.sum(v * x, axis=-1, keepdims=True) * x

    def base_distance(self, x, y) -> np.ndarray:
        return _sphere_angle(x, y)

    def base_log(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ang = _sphere_angle(x, y)[..., None]
        if np.any(ang >= self.injectivity_guard):
            raise BeyondInjectivityRadius("log of a nearly antipodal base point")
        c = np.sum(x * y, axis=-1, keepdims=True)
        rest = y - c * x
        norm = np.linalg.norm(rest, axis=-1, keepdims=True)
        small = norm < 1e-15
        safe = np.where(small, 1.0, norm)
        return np.where(small, 0.0, ang * rest / safe)

    def base_geodesic(self, x, v, t: float = 1.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        ang = np.linalg.norm(v, axis=-1, keepdims=True) * abs(t)
        if np.any(ang >= self.injectivity_guard):
            raise BeyondInjectivityRadius(
                "geodesic step leaves the injectivity-radius guard"
            )
        small = ang < 1e-15
        safe = np.where(small, 1.0, np.linalg.norm(v, axis=-1, keepdims=True))
        vhat = v / safe
        out = np.cos(ang) * x + np.sin(ang) * vhat * np.sign(t if t != 0 else 1.0)
        return np.where(small, x, out)

    def base_inner(self, x, u, v) -> np.ndarray:
        # fibration metric: the half-radius round sphere in unit-vector coords
        return 0.25 * np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)

    def base_norm(self, x, v) -> np.ndarray:
        return np.sqrt(self.base_inner(x, v, v))

    def random_base(self, rng: np.random.Generator) -> np.ndarray:
        x = rng.normal(size=3)
        return x / np.linalg.norm(x)

    def random_base_tangent(self, rng: np.random.Generator, x) -> np.ndarray:
        return self.base_tangent_project(x, rng.normal(size=3))

    # total-space metric ----------------------------------------------------------------

    def total_inner(self, p, u, v) -> np.ndarray:
        return np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)

    def total_norm(self, p, v) -> np.ndarray:
        return np.sqrt(self.total_inner(p, v, v))

    def total_distance(self, p, q) -> np.ndarray:
        return _sphere_angle(p, q)

    # fibration operations ----------------------------------------------------------------

    def horizontal_lift_vec(self, p, v) -> TangentSplit:
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != 3:
            raise BaseMismatch("base tangents are 3-vectors")
        x = self.project(p)
        if np.any(np.abs(np.sum(v * x, axis=-1)) > 1e-8 * np.maximum(1.0, np.linalg.norm(v, axis=-1))):
            raise BaseMismatch("vector is not tangent to the base at the fiber's point")
        lift = 0.5 * qmul(qmul(_pure(x), _pure(v)), p)
        return TangentSplit(p, lift, np.zeros_like(lift), lift)

    def _transport_rk4(self, q, x0, x_target, steps: int) -> np.ndarray:
        """Integrate the horizontal lift of the base geodesic x0 -> x_target."""
        c = np.clip(np.sum(x0 * x_target, axis=-1, keepdims=True), -1.0, 1.0)
        ang = _sphere_angle(x0, x_target)[..., None]
        rest = x_target - c * x0
        norm = np.linalg.norm(rest, axis=-1, keepdims=True)
        safe = np.where(norm < 1e-15, 1.0, norm)
        what = rest / safe

        def gamma(s):
            return np.cos(ang * s) * x0 + np.sin(ang * s) * what

        def dgamma(s):
            return ang * (-np.sin(ang * s) * x0 + np.cos(ang * s) * what)

        def rhs(s, qq):
            return 0.5 * qmul(qmul(_pure(gamma(s)), _pure(dgamma(s))), qq)

        h = 1.0 / steps
        out = q.copy()
        for k in range(steps):
            s = k * h
            k1 = rhs(s, out)
            k2 = rhs(s + 0.5 * h, out + 0.5 * h * k1)
            k3 = rhs(s + 0.5 * h, out + 0.5 * h * k2)
            k4 = rhs(s + h, out + h * k3)
            out = out + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out = qnormalize(out)
        return out

    def horizontal_transport(self, q, x_target, tol: float = 1e-9) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        x_target = self.base_canonicalize(x_target)
        x0 = self.project(q)
        ang = self.base_distance(x0, x_target)
        if np.any(ang >= self.injectivity_guard):
            raise BeyondInjectivityRadius("transport target outside the geodesic guard")
        if np.all(ang < 1e-14):
            return q.copy()
        steps = 64
        while True:
            out = self._transport_rk4(q, x0, x_target, steps)
            err = self.base_distance(self.project(out), x_target)
            if np.all(err < tol):
                return out
            if steps >= 4096:
                raise NonconvergedODE(
                    f"transport endpoint error {float(np.max(err)):.3g} at {steps} steps"
                )
            steps *= 2

    def fiber_shift(self, p, theta) -> np.ndarray:
        return qmul(np.asarray(p, dtype=float), quat_exp_i(theta))

    def adapted_exp(self, p, w) -> np.ndarray:
        split = self.split_tangent(p, w)
        theta = np.sum(split.vertical * self.vertical_unit(p), axis=-1)
        mid = self.fiber_shift(p, theta)
        wbar = self.dproj(p, split.horizontal)
        if np.all(np.linalg.norm(wbar, axis=-1) < 1e-15):
            return mid
        target = self.base_geodesic(self.project(p), wbar, 1.0)
        return self.horizontal_transport(mid, target)

    # sampling helpers ----------------------------------------------------------------------

    def section(self, x) -> np.ndarray:
        """A smooth local section away from the antipode of the i-pole."""
        x = self.base_canonicalize(x)
        a, b, c = np.moveaxis(x, -1, 0)
        q = np.stack([1.0 + a, np.zeros_like(a), -c, b], axis=-1)
        norms = np.linalg.norm(q, axis=-1)
        if np.any(norms < 1e-8):
            raise BaseMismatch("section is singular at the antipodal pole")
        return q / norms[..., None]

    def model_fiber(self, x, m: int) -> np.ndarray:
        q0 = self.section(x)
        theta = self.fiber_period * np.arange(m) / m
        return qmul(q0, quat_exp_i(theta))

    def base_grid(self, nb: int, max_colat: float = 1.25) -> np.ndarray:
        """Deterministic spiral of nb nodes in a cap around the i-pole."""
        k = np.arange(nb)
        colat = max_colat * np.sqrt((k + 0.5) / nb)
        golden = np.pi * (3.0 - np.sqrt(5.0))
        lon = golden * k
        return np.stack(
            [np.cos(colat), np.sin(colat) * np.cos(lon), np.sin(colat) * np.sin(lon)],
            axis=-1,
        )

    def sample_automorphism(self, rng: np.random.Generator) -> Automorphism:
        q1 = qnormalize(rng.normal(size=4))
        alpha = rng.uniform(0.0, 2.0 * np.pi)

        def apply(pts):
            return qmul(qmul(q1, np.asarray(pts, float)), quat_exp_i(alpha))

        def base_apply(xs):
            xt = _pure(np.asarray(xs, float))
            rot = qmul(qmul(q1, xt), qconj(q1))
            return rot[..., 1:]

        return Automorphism(f"rotate(q1={q1.round(3)}, a={alpha:.3f})", apply, base_apply)


class LensModel(HopfModel):
    """Quotient of the Hopf model by a cyclic right-rotation deck group."""

    def __init__(self, e: int):
        if e < 2:
            raise UnsupportedBase("lens models need euler number at least two")
        self.e = int(e)
        self.name = f"lens{e}"
        self.euler = int(e)
        self.fiber_period = 2.0 * np.pi / e
        self.deck_order = int(e)

    def deck_generator(self) -> np.ndarray:
        return quat_exp_i(2.0 * np.pi / self.e)

    def deck_orbit(self, p) -> np.ndarray:
        """Stack of all deck translates, leading axis of length e."""
        p = np.asarray(p, dtype=float)
        return np.stack(
            [qmul(p, quat_exp_i(2.0 * np.pi * k / self.e)) for k in range(self.e)]
        )

    def canonicalize(self, p) -> np.ndarray:
        """Lexicographically largest deck representative, componentwise."""
        orbit = self.deck_orbit(qnormalize(p))
        alive = np.ones(orbit.shape[:-1], dtype=bool)
        for axis in range(4):
            vals = np.where(alive, orbit[..., axis], -np.inf)
            best = vals.max(axis=0, keepdims=True)
            alive &= vals >= best - 1e-12
        idx = np.argmax(alive, axis=0)
        return np.take_along_axis(orbit, idx[None, ..., None], axis=0)[0]

    def total_distance(self, p, q) -> np.ndarray:
        orbit = self.deck_orbit(q)
        return _sphere_angle(np.asarray(p, float), orbit).min(axis=0)

    def model_fiber(self, x, m: int) -> np.ndarray:
        q0 = self.section(x)
        theta = self.fiber_period * np.arange(m) / m
        return qmul(q0, quat_exp_i(theta))


MODEL_NAMES = ("flat2", "flat3", "hopf", "lens2", "lens3")

_CACHE: dict[str, object] = {}


def get_model(name: str):
    """Look up a model by id; lens models accept any trailing integer >= 2."""
    if name in _CACHE:
        return _CACHE[name]
    if name == "flat2":
        model = FlatTorusOverCircle()
    elif name == "flat3":
        model = FlatTorus3OverTorus()
    elif name == "hopf":
        model = HopfModel()
    elif name.startswith("lens"):
        try:
            e = int(name[4:])
        except ValueError:
            raise UnsupportedBase(f"unknown model {name!r}") from None
        model = LensModel(e)
    else:
        raise UnsupportedBase(f"unknown model {name!r}")
    _CACHE[name] = model
    return model
