"""Exception hierarchy shared by every module."""


class GWError(Exception):
    """Base class for domain errors raised by the package."""


class InvariantError(GWError):
    """A Kohn-Sham data set violates one of its structural invariants."""


class DimensionMismatchError(GWError):
    """Blob sizes in a KSD bundle disagree with its manifest."""


class GapDegeneracyError(GWError):
    """HOMO and LUMO are (numerically) degenerate."""


class PoleProximityError(GWError):
    """A frequency sits too close to a pole of G0, chi0 or W_p."""


class SingularShiftError(GWError):
    """A shifted Kohn-Sham system is singular on the relevant subspace."""


class PoleOnPathError(GWError):
    """The vertical integration path runs through (or too near) a pole."""


class ResidueOverlapError(GWError):
    """A residue point coincides with a pole of W_p."""


class SingularCoreError(GWError):
    """The k x k middle factor of a low-rank correction is singular."""


class BudgetError(GWError):
    """A dense computation exceeds its size budget."""


class MissingDataError(GWError):
    """Required optional data (e.g. V_xc elements) is absent."""
