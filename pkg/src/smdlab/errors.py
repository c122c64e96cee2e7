"""Exception types shared across the library."""


class SmdlabError(Exception):
    """Base class for all library errors."""


class InputError(SmdlabError, ValueError):
    """A caller supplied a value outside an operation's precondition."""


class ConfigurationError(SmdlabError):
    """An unsupported or inconsistent combination of components."""


class NumericalError(SmdlabError):
    """A run produced a non-finite iterate; carries the offending step."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
