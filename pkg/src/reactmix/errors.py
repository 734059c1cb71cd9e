"""Exception types shared across the toolkit."""


class ReactmixError(Exception):
    """Base class for all toolkit errors."""


class StructuralError(ReactmixError):
    """Skeleton/sequence structure mismatch (joint counts, parents, partition)."""


class DataError(ReactmixError):
    """Non-finite or otherwise invalid numeric data."""


class DegeneratePoseError(ReactmixError):
    """A pose cannot define the quantity asked of it (e.g. zero-length facing)."""


class ParseError(ReactmixError):
    """A dataset file could not be parsed. Carries file/line context."""

    def __init__(self, message: str, path=None, line: int | None = None):
        ctx = ""
        if path is not None:
            ctx = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + ctx)
        self.path = path
        self.line = line


class ProtocolError(ReactmixError):
    """A split/evaluation protocol was requested with unmet preconditions."""


class CheckpointError(ReactmixError):
    """Checkpoint container is missing, malformed, or incompatible."""


class TrainingDivergedError(ReactmixError):
    """Training hit a non-finite loss; carries a diagnostic snapshot path."""

    def __init__(self, message: str, snapshot_path=None):
        super().__init__(message)
        self.snapshot_path = snapshot_path
