"""Exception types shared across modules."""


class DataFormatError(Exception):
    """Raised for corrupt or incompatible on-disk data (CLI exit code 3)."""


class NumericalError(Exception):
    """Raised for numerical failures such as a diverging solve
    (CLI exit code 4)."""
