"""Exception hierarchy.

Every error carries the CLI exit code it maps to: ``2`` for bad input or
schema problems, ``3`` for numerical degeneracies.
"""

from __future__ import annotations


class RocrecalError(ValueError):
    exit_code = 1


class InputError(RocrecalError):
    exit_code = 2


class NumericalError(RocrecalError):
    exit_code = 3


# -- input / schema ---------------------------------------------------------

class MissingLabel(InputError):
    pass


class NonFinite(InputError):
    pass


class LengthMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class SchemaMismatch(InputError):
    pass


class DuplicateId(InputError):
    pass


class ParseError(InputError):
    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class UnknownStratum(InputError):
    def __init__(self, stratum: int):
        self.stratum = stratum
        super().__init__(f"stratum {stratum} is not present in the calibrator")


class BadMode(InputError):
    pass


class ConfigError(InputError):
    pass


class InfeasibleSpec(InputError):
    pass


class TooLarge(InputError):
    pass


# -- numerical ----------------------------------------------------------------

class EmptyClass(NumericalError):
    pass


class ZeroPositives(EmptyClass):
    pass


class ZeroNegatives(EmptyClass):
    pass


class EmptyClassAfterSampling(EmptyClass):
    pass


class TooFewPoints(NumericalError):
    pass


class DegenerateWindow(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class EmptyStratum(NumericalError):
    pass


class DegeneratePrior(NumericalError):
    pass


def with_context(err: RocrecalError, prefix: str, **attrs) -> RocrecalError:
    """Copy of ``err`` with ``prefix`` prepended to its message and extra attributes."""
    new = type(err).__new__(type(err))
    new.__dict__.update(err.__dict__)
    new.__dict__.update(attrs)
    new.args = (f"{prefix}: {err}",)
    return new


def with_stratum(err: RocrecalError, stratum: int) -> RocrecalError:
    return with_context(err, f"stratum {stratum}", stratum=stratum)
