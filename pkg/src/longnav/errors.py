"""Exception types shared across the package."""


class LongNavError(Exception):
    """Base class for all longnav errors."""


class ConfigError(LongNavError, ValueError):
    """Invalid world, strategy, or run configuration."""


class NoConsensusError(LongNavError):
    """Histogram voting could not produce a shift estimate."""


class TeachError(LongNavError):
    """Teaching failed (e.g. a location yielded no features)."""


class DatasetError(LongNavError):
    """Dataset or snapshot file is malformed."""
