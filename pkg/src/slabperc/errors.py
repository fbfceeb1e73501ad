"""Exception types shared across the package."""


class SlabpercError(Exception):
    """Base class for all package errors."""


class GeometryError(SlabpercError, ValueError):
    """Box or event geometry is invalid (out of range, missing margin, ...)."""


class ResourceLimitError(SlabpercError, RuntimeError):
    """A configured resource cap would be exceeded (enumeration size, index width)."""


class FitInfeasibleError(SlabpercError, RuntimeError):
    """Too few usable data points for a regression."""


class DiagnosticError(SlabpercError, RuntimeError):
    """A statistical sanity check failed beyond its noise allowance."""
