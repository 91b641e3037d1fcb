class FlowError(ValueError):
    """Base error for discrete curves and their flow."""


class DegenerateCurveError(FlowError):
    """Two consecutive vertices closer than the arclength floor."""


class CFLViolationError(FlowError):
    """Explicit step larger than cfl * h^2."""


class GeodesicError(FlowError):
    """Polygon anchors too close (or antipodal) to fix a geodesic."""


class InsufficientSamplesError(FlowError):
    """A trajectory too short for centred time differences."""
