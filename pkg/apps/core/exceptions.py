"""Error hierarchy shared by every clipforge app."""


class ClipforgeError(Exception):
    """Base class for all toolkit errors."""


class Y4MFormatError(ClipforgeError):
    def __init__(self, message, frame_index=None):
        if frame_index is not None:
            message = f"{message} (frame {frame_index})"
        super().__init__(message)
        self.frame_index = frame_index


class FrameGeometryError(ClipforgeError):
    """Dimensions, subsampling or clip length do not line up."""


class CurveValidationError(ClipforgeError):
    def __init__(self, message, source=None, row=None):
        location = ""
        if source is not None:
            location = f"{source}"
            if row is not None:
                location += f", row {row}"
            location = f" [{location}]"
        super().__init__(f"{message}{location}")
        self.source = source
        self.row = row


class CurveOverlapError(ClipforgeError):
    """Two RD curves share no quality interval."""


class EncodeError(ClipforgeError):
    def __init__(self, message, argv=None, stderr=""):
        detail = f"{message}"
        if argv:
            detail += f" | command: {' '.join(str(a) for a in argv)}"
        if stderr:
            detail += f" | stderr: {stderr.strip()[-2000:]}"
        super().__init__(detail)
        self.argv = list(argv or [])
        self.stderr = stderr


class EncoderSpawnError(EncodeError):
    """The encoder binary could not be started."""


class DecodeError(EncodeError):
    """The encoded output could not be turned back into frames."""


class StatsParseError(ClipforgeError):
    """Per-frame encoder stats are malformed."""


class SchemaMismatchError(ClipforgeError):
    """A model was applied to features with a different schema."""


class PricingKeyError(ClipforgeError, KeyError):
    def __init__(self, key):
        super().__init__(f"No price for {key}")
        self.key = key

    def __str__(self):
        return self.args[0]


class RankDeficientError(ClipforgeError):
    """Least-squares design matrix does not have full column rank."""


class InsufficientDataError(ClipforgeError):
    """Not enough samples, sources or classes for the requested operation."""


class JobConfigError(ClipforgeError):
    """Invalid job configuration or command-line usage."""


class SampleValidationError(ClipforgeError):
    def __init__(self, message, source=None, row=None):
        if row is not None:
            message = f"{message} [{source or 'samples'}, row {row}]"
        super().__init__(message)
        self.source = source
        self.row = row
