class ValidationError(ValueError):
    """Bad input: malformed files, violated preconditions, bad configuration."""


class DatasetError(ValidationError):
    """A dataset directory or file could not be loaded."""


class NumericalError(RuntimeError):
    """A numerical routine (eigensolver, SVD) failed."""
