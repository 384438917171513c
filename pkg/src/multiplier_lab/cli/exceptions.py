"""Command-line exceptions."""


class ConfigError(Exception):
    """Raised when a run configuration is missing, unknown or fails validation."""
