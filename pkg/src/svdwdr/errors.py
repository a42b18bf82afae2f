"""Exception hierarchy shared by every stage of the codec."""


class CodecError(Exception):
    """Base class for all errors raised by :mod:`svdwdr`."""


# image_io
class UnsupportedFormat(CodecError):
    pass


class CorruptFile(CodecError):
    pass


class NonFiniteInput(CodecError, ValueError):
    pass


class IoFailure(CodecError, OSError):
    pass


# svd_lowrank
class ConvergenceFailure(CodecError):
    pass


class RankOutOfRange(CodecError, ValueError):
    pass


class RatioUnreachable(CodecError):
    pass


# wavelet
class DepthTooLarge(CodecError, ValueError):
    pass


class ShapeMismatch(CodecError, ValueError):
    pass


# wdr_codec
class AllZeroInput(CodecError):
    """Raised when a coefficient vector has no nonzero entry to encode."""


class MalformedStream(CodecError):
    pass


# metrics
class DimensionMismatch(CodecError, ValueError):
    pass


class ImageTooSmall(CodecError, ValueError):
    pass


# bench
class EmptyCorpus(CodecError):
    pass


class ExternalToolFailure(CodecError):
    pass
