"""Exception hierarchy shared by all modules.

The CLI maps each class to a process exit code, so library code raises
these rather than bare ``ValueError``.
"""


class AdaptKitError(Exception):
    exit_code = 1


class ArgumentError(AdaptKitError, ValueError):
    """Invalid argument or violated precondition."""

    exit_code = 1


class ConfigError(AdaptKitError, ValueError):
    """Malformed user configuration (patterns, rule files, manifests)."""

    exit_code = 1


class FormatError(AdaptKitError, ValueError):
    """Malformed input file. Carries the 1-based line number when known."""

    exit_code = 2

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class NumericalError(AdaptKitError, ArithmeticError):
    exit_code = 3
