"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A config document could not be parsed, or a required key is missing."""

    def __init__(self, message, *, section=None, key=None, line=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if section is not None:
            loc.append(f"section [{section}]")
        if key is not None:
            loc.append(f"key '{key}'")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.section = section
        self.key = key
        self.line = line


class ModelValidationError(ValueError):
    """One or more model invariants are violated.

    Validation is total: ``problems`` lists every violation found, not just
    the first one.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("model validation failed:\n  - " + "\n  - ".join(self.problems))


class NumericsError(RuntimeError):
    """A quadrature or eigensolve did not reach the requested accuracy."""


class RequiresNormalModesError(RuntimeError):
    """An operation needs the vibrational normal-mode solution first."""


class StateClassMismatchError(ValueError):
    """A closed-form timescale was requested for an incompatible state."""
