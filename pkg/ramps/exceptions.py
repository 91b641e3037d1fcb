class RampError(ValueError):
    """Bad ramp input: circle length out of range, winding other than one."""


class RampInvariantError(RuntimeError):
    """A ramp lost u > 0; this is a bug in the flow, not a flow event."""
