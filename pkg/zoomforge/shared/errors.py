class ForgeError(Exception):
    """
    Base class for every error zoomforge raises on purpose.

    The exit_code is what the CLI returns when this error reaches the top.
    """

    exit_code: int = 1


class ConfigurationError(ForgeError, ValueError):
    pass


class InputError(ForgeError, ValueError):
    pass


class ModelInvalidError(ForgeError, ValueError):
    pass


class ProtocolError(ForgeError, ValueError):
    pass


class NotApplicableError(ForgeError):
    pass


class ReportError(ForgeError):
    exit_code = 3

    def __init__(self, message: str, missing: list[str] | None = None):
        super().__init__(message)
        self.missing = list(missing or [])


class ArtifactIOError(ForgeError, OSError):
    exit_code = 3


class VerdictInconsistency(ForgeError):
    exit_code = 2
