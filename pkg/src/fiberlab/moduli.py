"""Fiberings by smooth circles: centers, straightening, and invariants.

A fibering is stored as an array of sampled fiber loops in one of the model
total spaces.  The routines here compute the weighted Karcher center of a
projected loop, re-express a loop as a normal graph over the model fiber
through its center, replace loops by model fibers (straightening), iterate
that to a fixed point, and read off the discrete invariants (slopes of flat
fiberings, core membership of round ones) that label the classification.

Distances between fibers are measured on sample clouds, wrapped for the flat
models and chordal for the sphere models; each Fibering records half its
minimal inter-fiber separation at construction time and later disjointness
checks compare against that threshold.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .circle_diffeo import winding_number
from .errors import (
    BadConfig,
    BaseCollision,
    DegenerateSpacing,
    DisjointnessLost,
    DivergingResiduals,
    Nonconvergence,
    NonInjectiveProjection,
    NonPrimitive,
    OutsideConvexBall,
    TubeRadiusExceeded,
    UnsupportedBase,
)
from .fields import FieldGrid, model_points
from .geometry import get_model, qconj, qmul, qnormalize

__all__ = [
    "FiberShape",
    "Fibering",
    "arclength_weights",
    "karcher_center",
    "brute_center",
    "fiber_center",
    "normal_graph",
    "straighten_shape",
    "straighten",
    "RefineResult",
    "refine",
    "slope",
    "CoreFamily",
    "core_membership",
    "perturb",
    "model_fibering",
    "slope_fibering",
    "fibering_min_separation",
]

_KARCHER_TOL = 1e-12
_KARCHER_MAX_ITER = 200


# --- weights and centers ---------------------------------------------------------


def arclength_weights(model, samples) -> np.ndarray:
    """Normalized trapezoid weights from the chord lengths of a sample loop."""
    samples = np.asarray(samples, dtype=float)
    chords = model.total_distance(samples, np.roll(samples, -1, axis=0))
    if np.any(chords <= 0.0):
        raise DegenerateSpacing("coincident consecutive samples on a loop")
    w = 0.5 * (chords + np.roll(chords, 1))
    return w / w.sum()


def _flat_circular_mean(points: np.ndarray) -> np.ndarray:
    ang = 2.0 * np.pi * points
    z = np.exp(1j * ang).mean(axis=0)
    return (np.angle(z) / (2.0 * np.pi)) % 1.0


def _init_center(model, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    if model.name.startswith("flat"):
        return _flat_circular_mean(points)
    mean = (weights[:, None] * points).sum(axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-12:
        raise OutsideConvexBall("projected samples have no preferred hemisphere")
    return mean / norm


def _check_weights(points: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.full(len(points), 1.0 / len(points))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(points),) or np.any(weights < 0) or weights.sum() <= 0:
        raise BadConfig("weights must be a nonnegative vector matching the samples")
    return weights / weights.sum()


def karcher_center(model, base_points, weights=None,
                   tol: float = _KARCHER_TOL,
                   max_iter: int = _KARCHER_MAX_ITER) -> np.ndarray:
    """Weighted Karcher mean of base points by fixed-point iteration.

    The iteration x <- exp_x(sum_i w_i log_x a_i) starts from the circular or
    normalized linear mean and contracts inside a convex ball; points spread
    beyond the model's convexity guard are rejected.
    """
    if isinstance(model, str):
        model = get_model(model)
    pts = np.asarray(base_points, dtype=float)
    w = _check_weights(pts, weights)
    x = _init_center(model, pts, w)
    if float(np.max(model.base_distance(x[None], pts))) > model.convex_ball_guard:
        raise OutsideConvexBall(
            f"samples leave the convexity guard {model.convex_ball_guard:.3f}"
        )
    for _ in range(max_iter):
        step = (w[:, None] * model.base_log(x[None], pts)).sum(axis=0)
        x = model.base_geodesic(x, step, 1.0)
        if float(np.linalg.norm(step)) < tol:
            return model.base_canonicalize(x)
    raise Nonconvergence("karcher iteration did not reach tolerance")


def brute_center(model, base_points, weights=None, nodes: int = 400,
                 radius: Optional[float] = None) -> np.ndarray:
    """Grid-search minimizer of the weighted squared-distance energy.

    Slow and deliberately independent of the fixed-point iteration; used to
    cross-check karcher_center.  The grid covers a tangent window around the
    initial mean, ``nodes`` per base dimension, and ties keep the first node.
    """
    if isinstance(model, str):
        model = get_model(model)
    pts = np.asarray(base_points, dtype=float)
    w = _check_weights(pts, weights)
    x0 = _init_center(model, pts, w)
    spread = float(np.max(model.base_distance(x0[None], pts)))
    if radius is None:
        radius = 1.05 * spread + 1e-6
    offsets = np.linspace(-radius, radius, nodes)
    if model.name.startswith("flat"):
        dim = model.base_ambient_dim
        grids = np.meshgrid(*([offsets] * dim), indexing="ij")
        cand = (x0 + np.stack([g.ravel() for g in grids], axis=-1)) % 1.0
    else:
        u1 = model.base_tangent_project(x0, np.array([0.0, 0.0, 1.0]))
        if np.linalg.norm(u1) < 1e-6:
            u1 = model.base_tangent_project(x0, np.array([0.0, 1.0, 0.0]))
        u1 /= np.linalg.norm(u1)
        u2 = np.cross(x0, u1)
        a, b = np.meshgrid(offsets, offsets, indexing="ij")
        tang = a.ravel()[:, None] * u1 + b.ravel()[:, None] * u2
        ang = np.linalg.norm(tang, axis=-1, keepdims=True)
        safe = np.where(ang < 1e-15, 1.0, ang)
        cand = np.cos(ang) * x0 + np.sin(ang) * tang / safe
    if model.name.startswith("flat"):
        d = model.base_distance(cand[:, None], pts[None, :])
    else:
        # Same half-angle distance as base_distance, but phrased through a
        # single matmul so the candidate grid stays cheap to sweep.
        dots = np.clip(cand @ pts.T, -1.0, 1.0)
        d = 2.0 * np.arctan2(np.sqrt(1.0 - dots), np.sqrt(1.0 + dots))
    energy = (d * d) @ w
    return model.base_canonicalize(cand[int(np.argmin(energy))])


def fiber_center(model, samples, measure: str = "arclength") -> np.ndarray:
    """Karcher center of a fiber loop's projection to the base."""
    if isinstance(model, str):
        model = get_model(model)
    samples = np.asarray(samples, dtype=float)
    if measure == "arclength":
        w = arclength_weights(model, samples)
    elif measure == "uniform":
        w = None
    else:
        raise BadConfig(f"unknown measure {measure!r}")
    return karcher_center(model, model.project(samples), w)


# --- shapes and fiberings -----------------------------------------------------------


@dataclass
class FiberShape:
    """One sampled fiber loop; samples are ordered along the loop."""

    model_name: str
    samples: np.ndarray
    validate: bool = True

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != self.model.ambient_dim:
            raise BadConfig("fiber samples are (m, ambient dim)")
        if len(self.samples) < 8:
            raise DegenerateSpacing("fiber loops need at least 8 samples")
        if self.validate:
            gaps = self.model.total_distance(
                self.samples, np.roll(self.samples, -1, axis=0)
            )
            if np.max(gaps) > 0.45 * (1.0 if self.model.name.startswith("flat")
                                      else np.pi):
                raise DegenerateSpacing("consecutive fiber samples too far apart")
            if np.min(gaps) <= 0.0:
                raise DegenerateSpacing("coincident consecutive fiber samples")

    @property
    def model(self):
        return get_model(self.model_name)

    @property
    def m(self) -> int:
        return len(self.samples)

    def center(self, measure: str = "arclength") -> np.ndarray:
        return fiber_center(self.model, self.samples, measure)


def fibering_min_separation(model, fibers: np.ndarray) -> float:
    """Smallest distance between samples of distinct fibers.

    Flat models use wrapped Euclidean distance through a periodic kd-tree;
    sphere models use chord distance, which orders pairs the same way as the
    angle does.
    """
    if isinstance(model, str):
        model = get_model(model)
    nb = fibers.shape[0]
    if nb < 2:
        return math.inf
    flat = model.name.startswith("flat")
    if flat:
        pts = fibers % 1.0
        # The modulo of a tiny negative float can land on 1.0 exactly, which
        # cKDTree's periodic box rejects.
        pts[pts >= 1.0] = 0.0
    else:
        pts = np.asarray(fibers, dtype=float)
    trees = [cKDTree(pts[i], boxsize=1.0 if flat else None) for i in range(nb)]
    best = math.inf
    for i in range(nb):
        for j in range(i + 1, nb):
            dist, _ = trees[j].query(pts[i], k=1)
            best = min(best, float(dist.min()))
    return best


@dataclass
class Fibering:
    """A family of disjoint sampled fiber loops in one model total space.

    ``threshold`` is half the minimal inter-fiber sample separation measured
    at construction; it is the yardstick later disjointness checks use.
    """

    model_name: str
    fibers: np.ndarray
    validate: bool = True

    def __post_init__(self):
        self.fibers = np.asarray(self.fibers, dtype=float)
        if self.fibers.ndim != 3 or self.fibers.shape[2] != self.model.ambient_dim:
            raise BadConfig("fiberings are (fibers, samples, ambient dim)")
        if self.validate:
            for row in self.fibers:
                FiberShape(self.model_name, row)
        sep = fibering_min_separation(self.model, self.fibers)
        if sep <= 1e-12:
            raise DisjointnessLost("fibers intersect at construction")
        self.threshold = 0.5 * sep

    @property
    def model(self):
        return get_model(self.model_name)

    @property
    def shape(self) -> tuple:
        return self.fibers.shape[:2]

    def min_separation(self) -> float:
        return fibering_min_separation(self.model, self.fibers)

    def check_disjoint(self, threshold: Optional[float] = None) -> float:
        limit = self.threshold if threshold is None else threshold
        sep = self.min_separation()
        if sep <= limit:
            raise DisjointnessLost(
                f"inter-fiber separation {sep:.3g} fell to the threshold {limit:.3g}"
            )
        return sep

    def centers(self, measure: str = "arclength") -> np.ndarray:
        return np.stack([fiber_center(self.model, row, measure) for row in self.fibers])

    def to_json(self) -> dict:
        return {"model": self.model_name, "fibers": self.fibers.tolist()}

    @classmethod
    def from_json(cls, payload: dict) -> "Fibering":
        try:
            return cls(payload["model"], np.array(payload["fibers"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise BadConfig(f"malformed fibering payload: {exc}") from exc


def model_fibering(model, nb: int, m: int) -> Fibering:
    """The straight fibering whose fibers are model fibers over a base grid."""
    if isinstance(model, str):
        model = get_model(model)
    return Fibering(model.name, model_points(model, nb, m))


def _transverse_offsets(p: int, q: int) -> tuple[int, int]:
    """Integer vector (a, b) with p*b - q*a = 1, for coprime (p, q)."""
    old_r, r, old_s, s, old_t, t = p, q, 1, 0, 0, 1
    while r != 0:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_s, s = s, old_s - k * s
        old_t, t = t, old_t - k * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return -old_t, old_s


def slope_fibering(p: int, q: int, nb: int, m: int, amp: float = 0.0,
                   phase: float = 0.0) -> Fibering:
    """Parallel slope-(p, q) loops on the flat two-torus, optionally sheared.

    The straight loops are images of the vertical model fibering under a
    unimodular map, so they fill the torus with equal transversal spacing.
    A nonzero ``amp`` displaces each point by amp*sin(2 pi (p x + q y) +
    phase) along the common normal; that map preserves every level set of
    p x + q y and slides it within itself, a shear of the torus, so the
    perturbed loops stay pairwise disjoint embedded circles at any
    amplitude.
    """
    p, q = int(p), int(q)
    if p == 0 and q == 0:
        raise NonPrimitive("slope (0, 0) is not a fibering direction")
    if math.gcd(abs(p), abs(q)) != 1:
        raise NonPrimitive(f"slope ({p}, {q}) is not primitive")
    a, b = _transverse_offsets(p, q)
    t = np.arange(m) / m
    offs = np.arange(nb) / nb
    x = p * t[None, :] + a * offs[:, None]
    y = q * t[None, :] + b * offs[:, None]
    if amp:
        disp = amp * np.sin(2.0 * np.pi * (p * x + q * y) + phase)
        norm = math.hypot(p, q)
        x = x - (q / norm) * disp
        y = y + (p / norm) * disp
    fibers = np.stack([x, y], axis=-1) % 1.0
    fibers[fibers >= 1.0] = 0.0
    return Fibering("flat2", fibers)


# --- normal graphs and straightening ----------------------------------------------------


def _fiber_point(model, center, theta) -> np.ndarray:
    """Point of the model fiber over ``center`` at parameter ``theta``.

    Flat fibers are parametrized by the last coordinate with period one;
    sphere fibers by the quaternion rotation angle, so the parameter range of
    a lens fiber is its shorter period.
    """
    theta = np.asarray(theta, dtype=float)
    if model.name.startswith("flat"):
        out = np.zeros(theta.shape + (model.ambient_dim,))
        out[..., : model.base_ambient_dim] = center
        out[..., -1] = theta % 1.0
        return out
    q0 = model.section(center)
    return qmul(q0, np.stack([np.cos(theta), np.sin(theta),
                              np.zeros_like(theta), np.zeros_like(theta)], axis=-1))


def _golden_argmin(f: Callable, lo: np.ndarray, hi: np.ndarray,
                   iters: int = 80) -> np.ndarray:
    """Vectorized golden-section minimizer over per-sample brackets."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.copy(), hi.copy()
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        take_left = fc < fd
        b = np.where(take_left, d, b)
        a = np.where(take_left, a, c)
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = f(c), f(d)
    return 0.5 * (a + b)


def normal_graph(model, samples, center) -> tuple[np.ndarray, np.ndarray]:
    """Parameters and distances of the nearest-point map onto a model fiber.

    Returns (thetas, dists) where thetas[j] is the fiber parameter closest to
    sample j and dists[j] the corresponding distance.  Raises when the loop
    leaves the normal tube of the model fiber or fails to traverse it once
    monotonically.
    """
    if isinstance(model, str):
        model = get_model(model)
    samples = np.asarray(samples, dtype=float)
    m = len(samples)
    period = model.fiber_period
    dense = max(64, 2 * m)
    grid = period * np.arange(dense) / dense
    fiber_pts = _fiber_point(model, center, grid)
    dmat = model.total_distance(samples[:, None], fiber_pts[None, :])
    seed = grid[np.argmin(dmat, axis=1)]

    def dist_at(theta):
        return model.total_distance(samples, _fiber_point(model, center, theta))

    width = period / dense
    thetas = _golden_argmin(dist_at, seed - width, seed + width) % period
    dists = dist_at(thetas)
    if float(np.max(dists)) >= model.tube_guard:
        raise TubeRadiusExceeded(
            f"sample at distance {float(np.max(dists)):.3g} from the model fiber"
        )
    steps = (np.roll(thetas, -1) - thetas + 0.5 * period) % period - 0.5 * period
    monotone = bool(np.all(steps > 0)) or bool(np.all(steps < 0))
    closes = abs(abs(float(steps.sum())) - period) < 1e-9 * max(1.0, period)
    if not (monotone and closes):
        raise NonInjectiveProjection("loop does not traverse the model fiber once")
    return thetas, dists


def straighten_shape(model, samples, measure: str = "arclength"):
    """Straighten one loop; returns (new samples, center, residual)."""
    center = fiber_center(model, samples, measure)
    thetas, dists = normal_graph(model, samples, center)
    new = _fiber_point(model, center, thetas)
    return new, center, float(np.max(dists))


def _thread_count() -> int:
    raw = os.environ.get("FIBERLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise BadConfig(f"FIBERLAB_THREADS must be an integer, got {raw!r}") from None


def straighten(fibering: Fibering, measure: str = "arclength"):
    """Replace every fiber by the model fiber over its center.

    Returns (new fibering, residual) where the residual is the largest
    distance any sample moved.  Centers that collide flag a non-fibering.
    """
    model = fibering.model
    rows = list(fibering.fibers)
    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda row: straighten_shape(model, row, measure), rows
            ))
    else:
        results = [straighten_shape(model, row, measure) for row in rows]
    new_fibers = np.stack([r[0] for r in results])
    centers = np.stack([r[1] for r in results])
    residual = max(r[2] for r in results)
    for i in range(len(centers)):
        d = model.base_distance(centers[i][None], centers[i + 1:])
        if d.size and float(np.min(d)) < 1e-6:
            raise BaseCollision("straightened fibers share a base point")
    return Fibering(fibering.model_name, new_fibers, validate=False), residual


@dataclass
class RefineResult:
    fibering: Fibering
    residuals: list


def refine(fibering: Fibering, passes: int = 10, tol: float = 1e-10,
           measure: str = "arclength") -> RefineResult:
    """Iterate straightening until the residual stalls below tolerance."""
    residuals = []
    current = fibering
    for _ in range(passes):
        current, res = straighten(current, measure)
        residuals.append(res)
        if res < tol:
            break
        if len(residuals) >= 3 and residuals[-1] > residuals[-2] > residuals[-3]:
            raise DivergingResiduals(
                f"straightening residuals increase: {residuals[-3:]}"
            )
    return RefineResult(current, residuals)


# --- invariants -------------------------------------------------------------------------


def slope(fibering_or_samples, model=None) -> tuple:
    """Winding vector of a flat fiber loop, normalized to a primitive tuple.

    The first nonzero entry is made positive; a zero or imprimitive vector is
    not the slope of an embedded fibering and is rejected.
    """
    if isinstance(fibering_or_samples, Fibering):
        model = fibering_or_samples.model
        samples = fibering_or_samples.fibers[0]
    else:
        if model is None:
            raise BadConfig("slope of raw samples needs the model")
        if isinstance(model, str):
            model = get_model(model)
        samples = np.asarray(fibering_or_samples, dtype=float)
    if not model.name.startswith("flat"):
        raise UnsupportedBase("slopes are defined for flat fiberings")
    closed = np.vstack([samples, samples[:1]])
    winds = tuple(int(winding_number(closed[:, k])) for k in range(model.ambient_dim))
    if all(w == 0 for w in winds):
        raise NonPrimitive("loop is contractible, not a fiber")
    g = math.gcd(*[abs(w) for w in winds])
    if g != 1:
        raise NonPrimitive(f"winding vector {winds} is not primitive")
    first = next(w for w in winds if w != 0)
    if first < 0:
        winds = tuple(-w for w in winds)
    return winds


@dataclass(frozen=True)
class CoreFamily:
    """Detected one-parameter coset family: chirality and oriented axis."""

    chirality: str
    direction: np.ndarray


def _increment_directions(increments: np.ndarray) -> Optional[np.ndarray]:
    imag = increments[:, 1:]
    norms = np.linalg.norm(imag, axis=1, keepdims=True)
    if np.any(norms < 1e-14):
        return None
    return imag / norms


def core_membership(model, fibers, tol: float = 1e-8) -> Optional[CoreFamily]:
    """Detect whether round fibers form one family of subgroup cosets.

    Every single coset of a circle subgroup is simultaneously a left and a
    right translate, so chirality is a property of the family: the fibering
    is right-handed when all fibers share one right-increment axis, and
    left-handed when they share one left-increment axis.  Right precedence
    breaks the tie for families that satisfy both (a single fiber does).
    """
    if isinstance(model, str):
        model = get_model(model)
    if model.name.startswith("flat"):
        raise UnsupportedBase("core membership applies to the sphere models")
    fibers = np.asarray(fibers, dtype=float)
    if fibers.ndim == 2:
        fibers = fibers[None]

    def family_axis(side: str) -> Optional[np.ndarray]:
        axes = []
        for row in fibers:
            nxt = np.roll(row, -1, axis=0)
            if side == "right":
                inc = qmul(qconj(row), nxt)
            else:
                inc = qmul(nxt, qconj(row))
            dirs = _increment_directions(inc)
            if dirs is None:
                return None
            axis = dirs[0]
            if np.max(np.linalg.norm(dirs - axis, axis=1)) > tol:
                return None
            axes.append(axis)
        axes = np.stack(axes)
        if np.max(np.linalg.norm(axes - axes[0], axis=1)) > tol:
            return None
        return axes.mean(axis=0) / np.linalg.norm(axes.mean(axis=0))

    right = family_axis("right")
    if right is not None:
        return CoreFamily("right", right)
    left = family_axis("left")
    if left is not None:
        return CoreFamily("left", left)
    return None


# --- perturbation flows -----------------------------------------------------------------


def perturb(fibering: Fibering, grid: FieldGrid, eps: float,
            steps: int = 8) -> Fibering:
    """Flow every sample for unit time along eps times an analytic field.

    The field must carry its generator (FieldGrid.func); a fourth-order
    Runge-Kutta loop with renormalization keeps sphere samples on the sphere.
    The flowed family must stay clear of the source fibering's disjointness
    threshold.
    """
    if grid.func is None:
        raise BadConfig("perturbation fields need an attached generator")
    model = fibering.model
    flat = model.name.startswith("flat")
    pts = fibering.fibers.copy()
    h = 1.0 / steps
    func = grid.func
    for _ in range(steps):
        k1 = eps * np.asarray(func(pts))
        k2 = eps * np.asarray(func(pts + 0.5 * h * k1))
        k3 = eps * np.asarray(func(pts + 0.5 * h * k2))
        k4 = eps * np.asarray(func(pts + h * k3))
        pts = pts + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if flat:
            pts %= 1.0
        else:
            pts = qnormalize(pts)
    out = Fibering(fibering.model_name, pts, validate=False)
    if out.min_separation() <= fibering.threshold:
        raise DisjointnessLost("perturbation pushed fibers into each other")
    return out
