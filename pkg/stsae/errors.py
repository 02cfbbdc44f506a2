#!/usr/bin/env python3
"""Exception hierarchy and exit-code mapping.

Exit codes (shared by every subcommand):
  0 success
  1 usage error (bad flags, bad config keys)
  2 data error (unreadable / inconsistent inputs, I/O failures)
  3 numerical failure (eigensolver, Cholesky, invalid parameter values)
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

__all__ = [
    'EXIT_OK', 'EXIT_USAGE', 'EXIT_DATA', 'EXIT_NUMERICAL',
    'StsaeError', 'UsageError', 'DataError', 'NumericalError',
    'UnknownArea', 'IslandArea', 'SelfLoop', 'DimensionMismatch', 'ParseError',
    'CovariateGap', 'NonNumeric', 'InvalidSpec', 'InvalidConfig',
    'IntensityExceedsPopulation', 'MisalignedDraws', 'DegenerateTime',
    'NoValidReplicates', 'EigenFailure', 'NonPositiveFactor', 'CholeskyFailure',
    'ParameterDomainError', 'SamplerFailure', 'exit_code_for',
]


class StsaeError(Exception):
    exit_code = EXIT_DATA


class UsageError(StsaeError):
    exit_code = EXIT_USAGE


class DataError(StsaeError):
    exit_code = EXIT_DATA


class NumericalError(StsaeError):
    exit_code = EXIT_NUMERICAL


class UnknownArea(DataError):
    pass


class IslandArea(DataError):
    pass


class SelfLoop(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ParseError(DataError):
    pass


class CovariateGap(DataError):
    pass


class NonNumeric(ParseError):
    pass


class InvalidSpec(DataError):
    pass


class InvalidConfig(UsageError):
    pass


class IntensityExceedsPopulation(DataError):
    pass


class MisalignedDraws(DataError):
    pass


class DegenerateTime(DataError):
    pass


class NoValidReplicates(DataError):
    pass


class EigenFailure(NumericalError):
    pass


class NonPositiveFactor(NumericalError):
    pass


class CholeskyFailure(NumericalError):
    pass


class ParameterDomainError(NumericalError):
    pass


class SamplerFailure(StsaeError):
    """Wraps an error raised inside a sweep with chain/iteration context.

    The exit code of the wrapped error is kept.
    """

    def __init__(self, cause, iteration, parameter, chain=0):
        self.cause = cause
        self.iteration = iteration
        self.parameter = parameter
        self.chain = chain
        self.exit_code = getattr(cause, 'exit_code', EXIT_NUMERICAL)
        super(SamplerFailure, self).__init__(
            'chain %d iteration %d while updating %s: %s' % (chain, iteration, parameter, cause))


def exit_code_for(exc):
    if isinstance(exc, StsaeError):
        return exc.exit_code
    if isinstance(exc, (OSError, ValueError)):
        return EXIT_DATA
    return EXIT_NUMERICAL
