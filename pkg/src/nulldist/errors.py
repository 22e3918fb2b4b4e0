"""Exception hierarchy shared across the engine."""


class NullDistError(Exception):
    """Base class for all engine errors."""


class OutOfDomain(NullDistError):
    pass


class ZeroVector(NullDistError):
    pass


class NotTemporal(NullDistError):
    pass


class UnknownModel(NullDistError):
    pass


class BadParams(NullDistError):
    pass


class OutOfRange(BadParams):
    pass


class DegenerateSegment(NullDistError):
    pass


class NotCausal(NullDistError):
    pass


class NotCausalRay(NullDistError):
    pass


class TooLarge(NullDistError):
    pass


class EmptyRegion(NullDistError):
    pass


class Unreachable(NullDistError):
    pass


class NoCausalPairs(NullDistError):
    pass


class ConfigError(NullDistError):
    pass
