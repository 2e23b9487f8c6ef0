"""Exception taxonomy shared by all tiltshift modules."""


class TiltShiftError(Exception):
    """Base class for all errors raised by this package."""


# --- dataset loading ---

class MalformedManifest(TiltShiftError):
    """lightfield.json is missing, unparseable, or inconsistent."""


class MissingView(TiltShiftError):
    """A grid cell declared by the manifest has no image on disk."""


class DimensionMismatch(TiltShiftError):
    """View or disparity dimensions disagree across the dataset."""


class MalformedCalibration(TiltShiftError):
    """Calibration violates its invariants (singular K, non-rotation R, ...)."""


class IoFailure(TiltShiftError):
    """Filesystem read/write failed."""


# --- geometry ---

class DegeneratePlane(TiltShiftError):
    """Refocus plane passes through (or too close to) the reference camera."""


class PointAtInfinity(TiltShiftError):
    """Projective mapping sent a pixel to the plane at infinity."""


class SingularProjection(TiltShiftError):
    """Projection matrix is not invertible."""


# --- depth / point cloud ---

class ZeroDisparity(TiltShiftError):
    """Disparity magnitude below threshold; the point is at infinity."""


class NonPositiveDepth(TiltShiftError):
    """Reprojection requires depth > 0."""


class NoDisparity(TiltShiftError):
    """Operation needs disparity maps the dataset does not carry."""


class TooFewPoints(TiltShiftError):
    """Not enough points for the requested neighborhood size."""


class PlaneBehindCamera(TiltShiftError):
    """Synthetic scene plane is not fully in front of a camera."""


# --- refocusing ---

class EmptyAperture(TiltShiftError):
    """No grid view falls inside the requested aperture."""


class OutOfHull(TiltShiftError):
    """Virtual reference position lies outside the camera grid hull."""


# --- interaction ---

class InvalidPixel(TiltShiftError):
    """Clicked pixel has no usable depth or normal."""


class CollinearPoints(TiltShiftError):
    """Three selected points do not span a plane."""


class OutOfRange(TiltShiftError):
    """Manual plane state outside its allowed parameter range."""


class NoPlane(TiltShiftError):
    """Render requested before any refocus plane was set."""
