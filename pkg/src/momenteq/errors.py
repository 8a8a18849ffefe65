"""Exception hierarchy. ``InputError`` subclasses map to CLI exit code 2,
``SolverFailure`` to 3."""


class MomentEqError(Exception):
    pass


class InputError(MomentEqError, ValueError):
    pass


class EmptySample(InputError):
    pass


class InvalidArity(InputError):
    pass


class DegenerateSupport(InputError):
    pass


class InvalidBelief(InputError):
    pass


class DominatedBid(InputError):
    pass


class ValueBelowSupport(InputError):
    pass


class BidOutsideSupport(InputError):
    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = tuple(offenders)


class InfeasibleBelief(InputError):
    pass


class CollinearDesign(InputError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class NotEnoughVariation(InputError):
    pass


class SchemaError(InputError):
    pass


class DensityUnderflow(MomentEqError):
    pass


class SolverFailure(MomentEqError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
