"""Exception types shared across the toolkit."""


class ConvergemaError(Exception):
    """Base class for all toolkit errors."""


class DegenerateData(ConvergemaError):
    """All observed accuracies are identical; the power-law family cannot
    represent flat data (a -> 0 lies outside the family)."""


class FitDiverged(ConvergemaError):
    """Fit hit the iteration cap without meeting tolerances."""


class CoincidentCurves(ConvergemaError):
    """Two curves are numerically indistinguishable on the scan grid."""


class NotDecreasing(ConvergemaError):
    """Asymptotic backbone increases beyond tolerance, so absolute
    thresholds are not applicable to this trace."""


class MissingWLevel(ConvergemaError):
    """Anchors requested before the working level is resolved."""


class MissingPLevel(ConvergemaError):
    """Look-ahead anchor switch requested before the prediction level is
    resolved."""


class UnresolvedCLevel(ConvergemaError):
    """A metric needs a convergence level that the run never reached."""


class MissingHorizon(ConvergemaError):
    """Accuracy metrics need horizon observations that were not supplied."""


class NotReached(ConvergemaError):
    """No level qualifies for the requested threshold within the trace."""
