class GeometryError(ValueError):
    """Base error for background evaluation."""


class OutsideDomainError(GeometryError):
    """Time outside the background's smooth existence interval."""


class OutsideChartError(GeometryError):
    """Point outside the chart's validity box, or in a foreign chart."""


class BlowUpError(RuntimeError):
    """A homogeneous curvature ODE reached its blow-up time."""
