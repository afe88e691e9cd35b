"""Exception hierarchy shared by all streambench modules."""


class StreamBenchError(Exception):
    """Base class for every error raised by this package."""


class DatasetParseError(StreamBenchError):
    """Input file could not be parsed (message carries the byte offset)."""


class DatasetReferenceError(StreamBenchError):
    """An id referenced by one input is missing from another."""


class ValidationError(StreamBenchError):
    """An input value violates a documented invariant."""


class ConfigError(StreamBenchError):
    """A configuration object violates its invariants."""


class SimulationError(StreamBenchError):
    """The stream simulator hit an unsatisfiable state."""


class NumericalError(StreamBenchError):
    """A numerical routine produced an invalid result (config pathology)."""
