class ContractError(ValueError):
    """An input violates a documented precondition."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class SizeLimitError(ValueError):
    """Exact enumeration requested on an instance that is too large."""


class StreamIntegrityError(ValueError):
    """A stream deletes something it never inserted, or ends with a
    multiplicity other than 0 or 1."""


class UnsupportedModeError(ValueError):
    """Deletions were fed to an insertion-only routine."""


class EdgeListParseError(ValueError):
    def __init__(self, path, lineno, line, reason):
        self.path = path
        self.lineno = lineno
        self.line = line
        super().__init__(f"{path}:{lineno}: {reason}: {line!r}")


class ConfigError(ValueError):
    """Experiment configuration failed validation."""
