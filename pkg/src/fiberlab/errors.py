"""Exception taxonomy shared by every fiberlab module.

Each exception carries a stable ``code`` string.  The command line layer
serializes failures as ``{"error": code, "message": ...}`` on stderr, so the
codes are part of the public interface and must not be renamed casually.
"""

from __future__ import annotations


class FiberlabError(Exception):
    """Base class for all structured fiberlab failures."""

    code = "FiberlabError"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


# --- sampled circle diffeomorphisms ---------------------------------------

class GridMismatch(FiberlabError):
    """Two sampled objects live on incompatible grids."""

    code = "GridMismatch"


class OrientationViolation(FiberlabError):
    """A displacement field fails the orientation bound (derivative <= -1)."""

    code = "OrientationViolation"


class UndersampledPath(FiberlabError):
    """A circle-valued path has gaps too large to lift unambiguously."""

    code = "UndersampledPath"


class AmplitudeGuard(FiberlabError):
    """Displacement oscillation exceeds the safe interpolation amplitude."""

    code = "AmplitudeGuard"


# --- cocycles and classification -------------------------------------------

class UnsupportedBase(FiberlabError):
    """Requested base surface is outside the fixed model list."""

    code = "UnsupportedBase"


class InvalidEuler(FiberlabError):
    """Euler number is impossible for the requested base."""

    code = "InvalidEuler"


# --- fibration geometry -----------------------------------------------------

class NotTangent(FiberlabError):
    """Vector is not tangent to the total space at the given point."""

    code = "NotTangent"


class BeyondInjectivityRadius(FiberlabError):
    """Requested geodesic leaves the guarded injectivity region."""

    code = "BeyondInjectivityRadius"


class NonconvergedODE(FiberlabError):
    """Transport integrator failed to hit its endpoint tolerance."""

    code = "NonconvergedODE"


class BaseMismatch(FiberlabError):
    """Base vector or point does not belong to the expected base location."""

    code = "BaseMismatch"


# --- centers and straightening ----------------------------------------------

class OutsideConvexBall(FiberlabError):
    """Input data leaves the convex ball guard for center-of-mass work."""

    code = "OutsideConvexBall"


class Nonconvergence(FiberlabError):
    """Fixed-point iteration ran out of iterations."""

    code = "Nonconvergence"


class TubeRadiusExceeded(FiberlabError):
    """A sample is too far from the reference fiber for normal projection."""

    code = "TubeRadiusExceeded"


class NonInjectiveProjection(FiberlabError):
    """Nearest-point correspondence onto the reference fiber folds over."""

    code = "NonInjectiveProjection"


class BaseCollision(FiberlabError):
    """Two fibers straighten to the same base node."""

    code = "BaseCollision"


class DivergingResiduals(FiberlabError):
    """Refinement residuals grew in two consecutive passes."""

    code = "DivergingResiduals"


class NonPrimitive(FiberlabError):
    """Winding vector is zero or has a common factor."""

    code = "NonPrimitive"


class DisjointnessLost(FiberlabError):
    """Fibers of a family came closer than the disjointness threshold."""

    code = "DisjointnessLost"

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


# --- curve-shortening flow ----------------------------------------------------

class DegenerateSpacing(FiberlabError):
    """Sample spacing collapsed or became too uneven to difference."""

    code = "DegenerateSpacing"


class CFLViolation(FiberlabError):
    """Explicit step size exceeds the parabolic stability bound."""

    code = "CFLViolation"


class SelfIntersection(FiberlabError):
    """Curve crossed itself at sample resolution."""

    code = "SelfIntersection"


class TimeBudgetExceeded(FiberlabError):
    """Flow hit its time horizon before reaching the curvature tolerance."""

    code = "TimeBudgetExceeded"


# --- command line -------------------------------------------------------------

class UnknownSubcommand(FiberlabError):
    """Requested CLI subcommand does not exist."""

    code = "UnknownSubcommand"


class BadConfig(FiberlabError):
    """Flags, config values, or input files are malformed."""

    code = "BadConfig"


class SelftestFailure(FiberlabError):
    """One or more selftest checks failed."""

    code = "SelftestFailure"
