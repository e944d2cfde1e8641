class DataError(ValueError):
    """Malformed or inconsistent input data (network, trips, result files)."""


class ConfigError(ValueError):
    """Invalid simulation or sweep configuration."""
