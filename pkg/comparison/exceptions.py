class ComparisonError(ValueError):
    """Bad input to a width comparison: nonpositive shift, too few samples."""


class OracleError(ComparisonError):
    """Disk oracle parameters out of range."""


class NotOracleCompatibleError(OracleError):
    """The curve is neither a flat round circle nor a totally geodesic cap boundary."""


class FamilyVerdictError(RuntimeError):
    """A family member is neither width bounded nor short."""
