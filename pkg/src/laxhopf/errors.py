"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SchemaError(ValueError):
    """Condition pieces or a scenario document are structurally invalid."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ConfigError(ValueError):
    """Numerical configuration is inconsistent (e.g. a CFL violation)."""
