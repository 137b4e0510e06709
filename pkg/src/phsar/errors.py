"""Exception types shared across the package."""


class ImageFormatError(ValueError):
    """Raised when an image file is readable but not in a supported format."""


class ModelFileError(OSError):
    """Raised when a model file is truncated or structurally invalid."""


class TrainingError(RuntimeError):
    """Raised when training cannot produce a model (e.g. no usable pairs)."""
