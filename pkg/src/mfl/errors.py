"""Exception hierarchy.

Every error carries a short ``code`` (snake_case) that the command line
reports verbatim, so scripts can branch on it without parsing messages.
"""

from __future__ import annotations


class MflError(Exception):
    code = "mfl_error"


class DomainViolation(MflError):
    code = "domain_violation"


class InvalidSchedule(MflError):
    code = "invalid_schedule"


class InsufficientHistory(MflError):
    code = "insufficient_history"


class UnboundedDomain(MflError):
    code = "unbounded_domain"


class DerivativeVanishes(MflError):
    code = "derivative_vanishes"


class MissingDerivatives(MflError):
    code = "missing_derivatives"


class FlatSecant(MflError):
    code = "flat_secant"


class TooShort(MflError):
    code = "too_short"


class NonmonotoneErrors(MflError):
    code = "nonmonotone_errors"


class InvalidInputs(MflError, ValueError):
    code = "invalid_inputs"


class UnreachableTime(MflError):
    code = "unreachable_time"


class NoCriticalPoint(MflError):
    code = "no_critical_point"


class OracleFailure(MflError):
    code = "oracle_failure"


class ZeroPayoff(MflError):
    code = "zero_payoff"


class SingularSystem(MflError):
    code = "singular_system"


class ConfigInvalid(MflError):
    code = "config_invalid"
