"""Exception hierarchy shared by all modules.

Each class carries the process exit code the command-line front end uses.
"""


class SwseqError(Exception):
    exit_code = 1


class ConfigurationError(SwseqError, ValueError):
    """Malformed input: a bad model, configuration or dimension pairing."""

    exit_code = 2


class DomainError(ConfigurationError):
    """A physical parameter lies outside its admissible range."""


class FeasibilityError(SwseqError, ValueError):
    """A switching schedule or timing violates the feasible set."""

    exit_code = 3


class NumericalError(SwseqError, ArithmeticError):
    exit_code = 4
