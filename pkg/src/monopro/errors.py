"""Exception hierarchy shared by all monopro modules."""


class MonoproError(ValueError):
    """Base class for every error raised by this package."""


class DimensionMismatch(MonoproError):
    pass


class NonHermitian(MonoproError):
    pass


class NonPositiveInput(MonoproError):
    """An input map or functional fails its own positivity certificate."""


class NonzeroConstantTerm(MonoproError):
    pass


class SingularConstantTerm(MonoproError):
    pass


class SingularLinearTerm(MonoproError):
    pass


class SpecMismatch(MonoproError):
    pass


class DepthBudgetExceeded(MonoproError):
    """A Fock computation would touch the truncation boundary."""


class ModeError(MonoproError):
    pass


class SizeLimit(MonoproError):
    pass


class OddSize(MonoproError):
    pass


class CrossingPartition(MonoproError):
    pass


class OrderExceeded(MonoproError):
    pass


class WrongAlgebra(MonoproError):
    pass
