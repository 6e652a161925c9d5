"""Exception types shared across the package.

The CLI maps each family onto a stable exit code, so new errors should
subclass one of the family roots below rather than ``DepthTriError``.
"""


class DepthTriError(Exception):
    """Root of every error raised by depthtri."""


# -- frame ingestion (exit 2) ------------------------------------------------

class FormatError(DepthTriError, ValueError):
    """File does not follow the DTF1 / CSV layout."""


class TruncatedFile(FormatError):
    """Fewer (or more) samples than the header declares."""


class DimensionMismatch(FormatError):
    """Frames or rows disagree on width/height."""


# -- regions and data content (exit 3) ---------------------------------------

class EmptyRegion(DepthTriError, ValueError):
    """Region holds no nonzero pixel."""


class OutOfBounds(DepthTriError, ValueError):
    """Region rectangle leaves the frame."""


class NoAdjacentPairs(EmptyRegion):
    pass


class AllZeroFrame(EmptyRegion):
    pass


class EmptyFrame(EmptyRegion):
    pass


class TooFewFrames(DepthTriError, ValueError):
    pass


# -- geometry (exit 5 / 6) ---------------------------------------------------

class DegenerateGeometry(DepthTriError, ValueError):
    """Sensor layout does not pin down the target (rank-deficient system)."""


class NoFiniteSolution(DegenerateGeometry):
    pass


class DegenerateTriangle(DepthTriError, ValueError):
    """Baselines violate the strict triangle inequality."""


class DivisionByZero(DepthTriError, ZeroDivisionError):
    """Trigonometric denominator vanished while converting an observation."""


# -- simulator ---------------------------------------------------------------

class NoIntersection(DepthTriError, ValueError):
    """Target plane is never hit by any camera ray."""


class InvalidPlan(DepthTriError, ValueError):
    """Survey or Monte Carlo configuration is unusable."""
