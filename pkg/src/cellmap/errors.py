"""Exception types raised across the package.

Everything derives from ``CellmapError`` (itself a ``ValueError``) so callers
can catch one type at the CLI boundary.
"""


class CellmapError(ValueError):
    pass


class InvalidInputError(CellmapError):
    pass


class EmptyUniverseError(CellmapError):
    pass


class UnknownTowerError(CellmapError):
    pass


class InsufficientDataError(CellmapError):
    pass


class InsufficientNeighborsError(InsufficientDataError):
    pass


class InvalidBoundsError(CellmapError):
    pass


class EmptyMapError(CellmapError):
    pass


class InvalidSpecError(CellmapError):
    pass


class FormatError(CellmapError):
    """Malformed or schema-violating file content."""
