"""Exception types shared across the package."""


class CboHullError(Exception):
    """Base class for package-specific failures."""


class InvalidGeometryError(CboHullError):
    """Hull parameters produce a self-intersecting or negative-radius profile."""


class NumericalError(CboHullError):
    """Linear algebra failed beyond recoverable jitter escalation."""


class EvaluationError(CboHullError):
    """A design evaluation backend failed.

    Carries optional diagnostics from an external process.
    """

    def __init__(self, message, *, exit_code=None, stderr=None):
        super().__init__(message)
        self.exit_code = exit_code
        self.stderr = stderr


class RunLogError(CboHullError):
    """A persisted run log is missing, corrupt, or fails validation."""
