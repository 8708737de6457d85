"""Exception hierarchy.

Every exception carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without a lookup table.
"""


class OrdevalError(Exception):
    exit_code = 1


class InputError(OrdevalError):
    """Malformed or inconsistent input files / arguments."""

    exit_code = 2


class UnknownLabel(InputError):
    pass


class MissingItem(InputError):
    pass


class DuplicateItem(InputError):
    pass


class EmptyDataset(InputError):
    pass


class UnknownSystem(InputError):
    pass


class UnknownMetric(InputError):
    pass


class PreconditionError(OrdevalError):
    """A metric was asked to score data outside its domain."""

    exit_code = 3


class EmptyGoldClass(PreconditionError):
    pass


class EmptyDistribution(PreconditionError):
    pass


class UndefinedCIQ(PreconditionError):
    pass


class UndefinedScore(PreconditionError):
    pass


class DegenerateInput(OrdevalError):
    """Zero-variance input to a correlation-style statistic."""

    exit_code = 4
