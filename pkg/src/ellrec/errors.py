"""Exception hierarchy.

Every error raised by the library derives from :class:`EllrecError`.  The CLI
maps :class:`NumericalGuard` subclasses to exit code 3 and everything else to
exit code 2.
"""


class EllrecError(Exception):
    """Base class for all library errors."""


class NumericalGuard(EllrecError):
    """An input is valid in principle but numerically unsafe to evaluate."""


class ZeroArgument(EllrecError, ValueError):
    pass


class NomeOutOfRange(EllrecError, ValueError):
    pass


class TruncationBudgetExceeded(NumericalGuard):
    pass


class PoleProximity(NumericalGuard):
    pass


class DegenerateConfiguration(NumericalGuard):
    pass


class AntisymmetryViolation(EllrecError):
    """A matrix that must be antisymmetric is not: an implementation bug."""


class NotARoot(EllrecError, ValueError):
    pass


class InvalidLatticeVector(EllrecError, ValueError):
    pass


class OffLattice(EllrecError, ValueError):
    pass


class NotInStabilizer(EllrecError, ValueError):
    pass


class ContourInvalid(NumericalGuard):
    pass


class BudgetExceeded(NumericalGuard):
    pass


class BalancingViolated(EllrecError, ValueError):
    pass


class MissingSeam(EllrecError, ValueError):
    pass


class WrongVectorCount(EllrecError, ValueError):
    pass


class NotUnitVector(EllrecError, ValueError):
    pass


class NotCommonCoset(EllrecError, ValueError):
    pass


class OrbitMembershipUnverified(EllrecError):
    """The bounded orbit search neither confirmed nor refuted membership."""


class UnknownSuite(EllrecError, KeyError):
    pass


class UnknownIdentity(EllrecError, KeyError):
    pass


class KernelRejected(EllrecError, ValueError):
    """A pair kernel failed antisymmetry or the three-term check."""
