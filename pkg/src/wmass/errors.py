"""Exception hierarchy shared by all modules."""


class WMassError(Exception):
    """Base class for every error raised by the toolkit."""


class PointExcluded(WMassError):
    """Evaluation point lies strictly inside a family's excluded ball."""


class NotPositiveDefinite(WMassError):
    """Metric value failed the Cholesky test at some evaluation point."""


class BadParams(WMassError):
    """Family parameters are invalid (e.g. m <= 0 or a decay violation)."""


class NonConverged(WMassError):
    """Radial extrapolation did not reach the configured tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ZeroMass(WMassError):
    """Centre of mass requested for a family whose mass vanishes."""


class ConfigError(WMassError):
    """Experiment or family configuration is malformed."""


class NoSignChange(WMassError):
    """Root bracket contains no sign change of the weighted mean curvature."""


class NotSpherical(WMassError):
    """Operation requires a spherically symmetric family."""


class WrongDimension(WMassError):
    """Operation is restricted to a dimension the family does not have."""


class PreconditionFailed(WMassError):
    """An inequality hypothesis (S_f >= 0, outer-minimising) was not certified."""
