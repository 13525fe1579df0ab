"""Exception types mapped to CLI exit codes."""


class DataError(ValueError):
    """Bad or unusable input data (exit code 3)."""


class NumericError(ArithmeticError):
    """A numerical stage produced unusable values (exit code 4)."""


class BundleError(DataError):
    """Model bundle is corrupt or has an unsupported version."""
