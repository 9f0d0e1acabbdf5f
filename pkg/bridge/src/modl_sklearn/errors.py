class BridgeError(Exception):
    """Base class for wrapper errors."""


class UsageError(BridgeError, ValueError):
    """Invalid arguments or specification (CLI exit code 2)."""


class DataFormatError(BridgeError):
    """The materialized data was rejected by the pipeline (exit code 3)."""


class InternalError(BridgeError):
    """The pipeline reported a broken invariant (exit code 4)."""


class NotFittedError(BridgeError):
    """predict/predict_proba called before fit."""
