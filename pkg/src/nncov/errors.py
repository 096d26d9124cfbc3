"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes or widths of numeric inputs do not line up."""


class TraceFormatError(ValueError):
    """A trace directory violates the on-disk format contract."""


class ProfileError(ValueError):
    """A training profile is missing, empty, or does not cover a trace."""
