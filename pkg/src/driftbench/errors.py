"""Exception types shared across the toolkit."""


class FormatError(ValueError):
    """A binary file does not match its declared layout."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


class MissingEmbeddingError(LookupError):
    """A lookup embedder was queried for an example it has no row for."""


class InitializationError(RuntimeError):
    """A component could not be brought into a usable state."""
