"""Exception hierarchy; every error carries the CLI exit code it maps to."""


class HeckeEnvError(Exception):
    exit_code = 1


# ---------- usage / precondition errors (exit 2) ----------
class UsageError(HeckeEnvError, ValueError):
    exit_code = 2


class ConfigurationError(UsageError):
    pass


class BoundExceededError(UsageError):
    pass


class NonPositiveRError(UsageError):
    pass


class OutOfRangeError(UsageError):
    pass


class NotPrimeError(UsageError):
    pass


class UnsupportedDegreeError(UsageError):
    pass


class UnreachablePrimeError(UsageError):
    pass


class InsufficientDataError(UsageError):
    pass


class NonPositiveSeriesError(UsageError):
    pass


# ---------- data / verification errors (exit 1) ----------
class CoefficientOverflowError(HeckeEnvError):
    """A reconstructed coefficient left the signed 128-bit range: an internal bug."""


class DeligneViolationError(HeckeEnvError):
    """|lambda(p)| > 2: the coefficient data is corrupted."""


class NoValidCandidateError(HeckeEnvError):
    pass


class SeriesDivisionError(HeckeEnvError):
    pass


class VerificationFailedError(HeckeEnvError):
    pass


class CacheFormatError(HeckeEnvError):
    pass


class BadMagicError(CacheFormatError):
    pass


class BadVersionError(CacheFormatError):
    pass


class TruncatedFileError(CacheFormatError):
    pass


class ChecksumMismatchError(CacheFormatError):
    pass
