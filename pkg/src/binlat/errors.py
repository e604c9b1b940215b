"""Exception and warning types raised by binlat."""


class BinlatError(Exception):
    """Base class for estimation failures."""


class SeparationDetected(BinlatError):
    """The GLM likelihood has no finite maximiser (perfect separation)."""


class SingularHessian(BinlatError):
    """A weighted Gram or information matrix is numerically singular."""


class NoConvergence(BinlatError):
    """An iterative solver exhausted its iteration budget or diverged."""


class DegenerateFit(BinlatError):
    """The latent variance estimate sits on the boundary tau = 0."""


class SingularGramMatrix(BinlatError):
    """The outer-product score matrix cannot be inverted."""


class NearSingularWarning(UserWarning):
    """A matrix inverted for a sandwich has condition number above 1e12."""
