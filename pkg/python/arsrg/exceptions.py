"""Exception hierarchy. Every ArsrgError carries the process exit code the CLI reports for it."""


class ArsrgError(Exception):
    """Base class for all errors raised by the arsrg package."""
    exit_code: int = 3


class ArsrgIoError(ArsrgError):
    """A file is missing, unreadable or unwritable."""


class FormatError(ArsrgError):
    """A file or document is malformed or in an unsupported format."""

    def __init__(self, message: str, field: str = None):
        """A file or document is malformed.

        Args:
            message (str): Diagnostic message.
            field (str): Optional path of the offending field, eg "regions.sizes".

        """
        self.field = field
        if field:
            message = f'{field}: {message}'
        super().__init__(message)


class DegenerateInput(ArsrgError):
    """The input cannot be processed, eg an image with no pixels."""


class TooSmall(ArsrgError):
    """The image is below the minimum size for keypoint detection."""


class OutOfBounds(ArsrgError):
    """A keypoint lies outside the image it is being assigned to."""


class DimensionMismatch(ArsrgError):
    """Two vectors or arrays do not have compatible shapes."""


class EmptyGraph(ArsrgError):
    """A query graph has no leaves left to match."""


class EmptyInput(ArsrgError):
    """An aggregate was requested over an empty collection."""


class EmptyRelevantSet(ArsrgError):
    """Recall was requested with an empty relevant set."""


class InsufficientData(ArsrgError):
    """Not enough samples to train a model, eg fewer descriptors than codebook words."""


class EmptyTrainingSet(ArsrgError):
    """A classifier was asked to predict without training data."""


class ManifestError(ArsrgError):
    """A dataset manifest is malformed."""

    def __init__(self, message: str, line: int = None):
        """A dataset manifest is malformed.

        Args:
            message (str): Diagnostic message.
            line (int): Optional 1-based line number in the manifest file.

        """
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class InvariantViolation(ArsrgError):
    """An internal consistency check failed."""
    exit_code = 4
