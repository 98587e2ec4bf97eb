"""Exception types shared across the package."""


class RobustTreesError(Exception):
    """Base class for package-specific failures."""


class CapExceeded(RobustTreesError):
    """An enumeration would exceed its configured cap."""


class ConvergenceStall(RobustTreesError):
    """Cut generation produced a worst-case scenario it already holds."""


class InfeasibleTarget(RobustTreesError):
    """No perturbation can route the sample to the requested leaf."""


class NoSplitAvailable(RobustTreesError):
    """Every item's threshold catalog is empty."""


class DegenerateVariance(RobustTreesError):
    """Correlation is undefined because one variable has zero variance."""
