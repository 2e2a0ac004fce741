"""Exception types shared across the package."""


class PercLabError(Exception):
    """Base class for all perclab errors."""


class RegionOutOfWindow(PercLabError):
    """A region does not fit inside the window with the required margin."""


class SiteOutOfRegion(PercLabError):
    """A queried site is not part of the region/window at hand."""


class ModeMismatch(PercLabError):
    """An event requiring half-plane (or plane) mode got the wrong window."""


class MarkedSitesTooClose(PercLabError):
    """Marked sites violate the minimum pairwise separation."""


class UnsupportedPattern(PercLabError):
    """An arm pattern outside the supported family was requested."""


class WindowTooLarge(PercLabError):
    """Exhaustive enumeration was asked for on too many random sites."""


class DegenerateInput(PercLabError):
    """Numerical routine received degenerate input (coincident points, ...)."""


class DomainError(PercLabError):
    """Argument outside a formula's domain."""


class PoleError(PercLabError):
    """Evaluation of a Moebius map at its pole."""
