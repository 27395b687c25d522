"""Exception hierarchy.

Every error raised by the library derives from :class:`GramEntropyError`,
which is itself a ``ValueError`` so that callers validating inputs with
``except ValueError`` keep working.
"""


class GramEntropyError(ValueError):
    """Base class for all library errors."""


class InputError(GramEntropyError):
    """Malformed input: wrong shape, non-finite entries, bad arguments."""


class NotPSDError(GramEntropyError):
    """A matrix required to be positive semidefinite has a negative eigenvalue."""


class DomainError(GramEntropyError):
    """An elementwise operation left its domain (e.g. log of a nonpositive entry)."""


class DegenerateError(GramEntropyError):
    """A normalizing quantity vanished (zero trace, zero projection)."""


class PreconditionError(GramEntropyError):
    """A mathematical hypothesis of an operation does not hold."""


class NotHilbertianError(GramEntropyError):
    """A distance matrix does not embed isometrically into Euclidean space."""


class StratificationError(GramEntropyError):
    """A class has too few members to be split across folds."""


class DivergenceError(GramEntropyError):
    """Training produced a non-finite objective.

    The partial :class:`~gramentropy.ceml.TrainReport` is attached as
    ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
