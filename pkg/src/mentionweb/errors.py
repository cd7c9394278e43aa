"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file does not match its expected on-disk format."""


class ValidationError(ValueError):
    """In-memory data violates an invariant (duplicate ids, bad shapes, ...)."""


class ConfigError(ValueError):
    """A configuration value is out of range or inconsistent."""


class GenerationError(RuntimeError):
    """Synthetic data generation could not satisfy its constraints."""


class TrainingError(RuntimeError):
    """The training set is degenerate (e.g. only one class present)."""


class UndefinedModularityError(ValueError):
    """Modularity is requested on a graph with no positive edge weight."""
