"""Exception hierarchy.

Everything raised for bad *data* derives from :class:`DataError` so the CLI can
map it to exit code 2 without catching programming errors.
"""


class EcgFuseError(Exception):
    """Base class for all package errors."""


class DataError(EcgFuseError, ValueError):
    """Input data violates an operation's contract."""


# embedding
class SeriesTooShort(DataError):
    pass


class NonFiniteSample(DataError):
    pass


class SeriesDegenerate(DataError):
    pass


class EmptyInput(DataError):
    pass


# fis
class ZeroActivation(DataError):
    pass


class FisConfigError(DataError):
    pass


# lwlpa / nfda
class NotEnoughStates(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class TooFewTrajectories(DataError):
    pass


class TooFewStates(DataError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class NonFiniteState(DataError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


# vcgprep
class MissingLead(DataError, KeyError):
    def __init__(self, lead):
        super().__init__(lead)
        self.lead = lead

    def __str__(self):
        return f"missing lead {self.lead!r}"


class LeadOrderMismatch(DataError):
    pass


class UnacceptableRecord(DataError):
    """Record failed constant-lead screening and must not be fused."""

    def __init__(self, leads):
        super().__init__(f"constant lead(s): {', '.join(leads)}")
        self.leads = list(leads)


# synthgen
class IntegrationUnstable(DataError):
    def __init__(self, message, suggested_sample_rate_hz=None):
        super().__init__(message)
        self.suggested_sample_rate_hz = suggested_sample_rate_hz


class ZeroNoisePower(DataError):
    pass


class ZeroSignalPower(DataError):
    pass


class SegmentTooShort(DataError):
    pass


# recordio
class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RaggedRows(ParseError):
    pass


class MissingHeader(ParseError):
    pass


class EmptyTrajectory(DataError):
    pass


class WindowLargerThanRecord(DataError):
    pass
