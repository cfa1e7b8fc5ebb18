"""Sampled orientation-preserving circle diffeomorphisms.

A diffeomorphism f of the unit circle R/Z is stored through its periodic
displacement u(x) = f(x) - x, sampled on the uniform grid x_k = k/n with n a
power of two.  Orientation means the derivative bound u'(x) > -1, checked with
the spectral derivative at the grid nodes.  Displacements are kept as plain
real samples; values are not reduced mod 1, so a full rotation and the
identity stay distinguishable as stored data even though they agree as circle
maps.

The module also provides the spectral heat semigroup on displacements and the
retraction it generates, which slides any diffeomorphism to the rotation by
its mean displacement as the flow parameter reaches one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import AmplitudeGuard, GridMismatch, OrientationViolation, UndersampledPath

__all__ = [
    "CircleDiffeo",
    "identity",
    "rotation",
    "compose",
    "invert",
    "heat_step",
    "retract",
    "winding_number",
    "random_diffeo",
]

_MIN_GRID = 16
#: Oscillation bound above which cubic resampling of a displacement is refused.
COMPOSE_AMPLITUDE_GUARD = 0.4


def _check_grid_size(n: int) -> None:
    if n < _MIN_GRID or (n & (n - 1)) != 0:
        raise GridMismatch(
            f"grid size must be a power of two >= {_MIN_GRID}, got {n}"
        )


def _spectral_derivative(disp: np.ndarray) -> np.ndarray:
    n = disp.shape[0]
    freqs = np.fft.rfftfreq(n, d=1.0 / n)  # integer wave numbers 0..n/2
    return np.fft.irfft(np.fft.rfft(disp) * (2j * np.pi * freqs), n=n)


@dataclass(frozen=True)
class CircleDiffeo:
    """Displacement samples of an orientation-preserving circle map.

    Attributes
    ----------
    disp : ndarray, shape (n,)
        Values u(x_k) at x_k = k/n.  n must be a power of two, at least 16.
    """

    disp: np.ndarray

    def __post_init__(self):
        disp = np.asarray(self.disp, dtype=float)
        if disp.ndim != 1:
            raise GridMismatch("displacement must be a one-dimensional sample array")
        _check_grid_size(disp.shape[0])
        if not np.all(np.isfinite(disp)):
            raise OrientationViolation("displacement contains non-finite samples")
        disp = disp.copy()
        disp.setflags(write=False)
        object.__setattr__(self, "disp", disp)
        dmin = float(_spectral_derivative(disp).min())
        if dmin <= -1.0 + 1e-12:
            raise OrientationViolation(
                f"displacement derivative reaches {dmin:.6g} <= -1"
            )

    # -- basic queries ------------------------------------------------------

    @property
    def n(self) -> int:
        return self.disp.shape[0]

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    @cached_property
    def _spline(self) -> CubicSpline:
        x = np.arange(self.n + 1) / self.n
        y = np.append(self.disp, self.disp[0])
        return CubicSpline(x, y, bc_type="periodic")

    def displacement_at(self, x) -> np.ndarray:
        """Periodic cubic interpolation of u at arbitrary circle points."""
        return self._spline(np.asarray(x, dtype=float) % 1.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x + self.displacement_at(x)

    def min_derivative(self) -> float:
        return float(1.0 + _spectral_derivative(self.disp).min())

    def mean_displacement(self) -> float:
        return float(self.disp.mean())

    def oscillation(self) -> float:
        """Sup-norm of the displacement around its mean (rotation part)."""
        u = self.disp
        return float(np.abs(u - u.mean()).max())

    def is_rotation(self, tol: float = 1e-12) -> bool:
        return self.oscillation() <= tol

    def rotation_angle(self, tol: float = 1e-9) -> float:
        """Angle in [0, 1) when the map is a rotation within ``tol``."""
        if self.oscillation() > tol:
            raise OrientationViolation(
                "map is not a rotation within the requested tolerance"
            )
        return float(self.disp.mean() % 1.0)


def identity(n: int = 256) -> CircleDiffeo:
    _check_grid_size(n)
    return CircleDiffeo(np.zeros(n))


def rotation(theta: float, n: int = 256) -> CircleDiffeo:
    _check_grid_size(n)
    return CircleDiffeo(np.full(n, float(theta)))


def _guard_amplitude(f: CircleDiffeo, who: str) -> None:
    osc = f.oscillation()
    if osc > COMPOSE_AMPLITUDE_GUARD:
        raise AmplitudeGuard(
            f"{who}: displacement oscillation {osc:.3g} exceeds the cubic "
            f"resampling guard {COMPOSE_AMPLITUDE_GUARD}"
        )


def compose(f: CircleDiffeo, g: CircleDiffeo) -> CircleDiffeo:
    """Samples of f o g on g's grid.

    The displacement of the composite is u_g(x) + u_f(g(x)); the second term
    needs off-grid evaluation of u_f, done with the periodic cubic spline.
    Rotations resample exactly only up to spline roundoff unless the whole
    shift is a grid multiple, so keep oscillations under the guard.
    """
    if f.n != g.n:
        raise GridMismatch(f"cannot compose grids of size {f.n} and {g.n}")
    _guard_amplitude(f, "outer map")
    _guard_amplitude(g, "inner map")
    x = g.grid
    disp = g.disp + f.displacement_at(x + g.disp)
    try:
        return CircleDiffeo(disp)
    except OrientationViolation as exc:
        raise OrientationViolation(f"composition leaves the group: {exc}") from exc


def invert(f: CircleDiffeo) -> CircleDiffeo:
    """Displacement samples of the inverse circle map.

    Solves f(x) = y per grid node with a bracketed root find on the lifted
    map, which is strictly increasing thanks to the orientation bound.
    Constant displacements invert exactly without any root finding.
    """
    if f.is_rotation(tol=1e-15):
        return CircleDiffeo(-f.disp)
    _guard_amplitude(f, "inverse")
    n = f.n
    u = f.disp
    umin = float(u.min()) - 1e-9
    umax = float(u.max()) + 1e-9
    ys = np.arange(n) / n
    xs = np.empty(n)
    spline = f._spline

    def lifted(x: float, y: float) -> float:
        return x + float(spline(x % 1.0)) - y

    for k in range(n):
        y = ys[k]
        xs[k] = brentq(lifted, y - umax, y - umin, args=(y,), xtol=1e-14, rtol=8.9e-16)
    return CircleDiffeo(xs - ys)


def heat_step(disp: np.ndarray, s: float) -> np.ndarray:
    """Apply the periodic heat propagator for time s to displacement samples.

    Mode k is damped by exp(-4 pi^2 k^2 s); the mean (mode zero) is untouched.
    """
    if not (s >= 0.0) or not math.isfinite(s):
        raise OrientationViolation(f"heat time must be finite and nonnegative, got {s}")
    disp = np.asarray(disp, dtype=float)
    n = disp.shape[0]
    _check_grid_size(n)
    freqs = np.fft.rfftfreq(n, d=1.0 / n)
    damp = np.exp(-4.0 * np.pi**2 * freqs**2 * s)
    damp[0] = 1.0
    return np.fft.irfft(np.fft.rfft(disp) * damp, n=n)


def retract(f: CircleDiffeo, t: float) -> CircleDiffeo:
    """Heat-flow retraction toward rotations.

    The flow parameter t in [0, 1] is rescaled to heat time s = t/(1-t); the
    endpoint t = 1 zeroes every nonzero mode exactly, landing on the rotation
    by the mean displacement.  Orientation survives along the way because the
    derivative field obeys the same positivity-preserving heat flow.
    """
    if not 0.0 <= t <= 1.0:
        raise OrientationViolation(f"retraction parameter must lie in [0, 1], got {t}")
    if t == 0.0:
        return CircleDiffeo(f.disp)
    if t == 1.0:
        return CircleDiffeo(np.full(f.n, f.disp.mean()))
    return CircleDiffeo(heat_step(f.disp, t / (1.0 - t)))


def winding_number(path, residual_tol: float = 0.25) -> int:
    """Winding of a circle-valued sample path.

    Consecutive gaps must stay below one half; each increment is wrapped to
    its minimal signed representative and the total is rounded.  A rounding
    residual at or above ``residual_tol`` means the path is too sparse to
    trust and raises :class:`UndersampledPath`.
    """
    a = np.asarray(path, dtype=float)
    if a.ndim != 1 or a.shape[0] < 2:
        raise UndersampledPath("need at least two samples to wind")
    d = np.diff(a % 1.0)
    d = (d + 0.5) % 1.0 - 0.5
    if np.any(np.abs(d) >= 0.5 - 1e-12):
        raise UndersampledPath("a sample gap reaches one half turn")
    total = float(d.sum())
    w = round(total)
    if abs(total - w) >= residual_tol:
        raise UndersampledPath(
            f"winding residual {abs(total - w):.3g} exceeds {residual_tol}"
        )
    return int(w)


def random_diffeo(
    rng: np.random.Generator,
    n: int = 256,
    amplitude: float = 0.1,
    modes: int = 3,
    mean: float | None = None,
) -> CircleDiffeo:
    """Smooth random diffeomorphism with controlled displacement amplitude.

    Draws a low-frequency trigonometric displacement, rescales its
    oscillation to ``amplitude``, and rescales again if needed so the
    derivative stays safely above -1.
    """
    _check_grid_size(n)
    x = np.arange(n) / n
    u = np.zeros(n)
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2) / k
        u += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    osc = np.abs(u).max()
    if osc > 0:
        u *= amplitude / osc
    dmin = _spectral_derivative(u).min()
    if dmin <= -0.8:
        u *= 0.8 / abs(dmin)
    shift = rng.uniform() if mean is None else float(mean)
    return CircleDiffeo(u + shift)
