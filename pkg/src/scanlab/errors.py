"""Exception types shared across the package."""


class CapacityError(Exception):
    """Requested object exceeds a hard enumeration or memory guard."""


class ConfigError(Exception):
    """Invalid or incomplete configuration (CLI exit code 2)."""
