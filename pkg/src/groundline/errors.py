"""Exception types shared across the toolkit."""


class ParseError(ValueError):
    """Malformed input data (text row, LAS header, scene spec, ...)."""


class DuplicatePointError(ValueError):
    """Two consecutive points with zero horizontal spacing."""


class DegenerateGeometryError(ValueError):
    """Geometry too degenerate for the requested estimate (e.g. collinear patch)."""


class SeedSelectionError(RuntimeError):
    """No ground seeds could be selected, so no initial terrain model exists."""
