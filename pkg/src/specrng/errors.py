"""Exception hierarchy shared by every specrng module."""


class SpecrngError(Exception):
    """Base class for all errors raised by specrng."""


class InvalidParams(SpecrngError, ValueError):
    """A parameter set violates one of its invariants."""


class TooFewSamples(SpecrngError, ValueError):
    pass


class IoError(SpecrngError, OSError):
    pass


class DecodeError(SpecrngError, ValueError):
    pass


class EmptyImage(SpecrngError, ValueError):
    pass


class NonFiniteInput(SpecrngError, ValueError):
    pass


class EmptyFrame(SpecrngError, ValueError):
    pass


class DegenerateSource(SpecrngError):
    """Too many consecutive all-zero frames; the spectrogram carries no usable texture."""


class EmptyInput(SpecrngError, ValueError):
    pass


class InputTooShort(SpecrngError, ValueError):
    pass


class DomainError(SpecrngError, ValueError):
    pass
