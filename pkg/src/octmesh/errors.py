"""Exception hierarchy shared by all octmesh modules."""


class OctmeshError(Exception):
    pass


class InvalidConfig(OctmeshError, ValueError):
    pass


class PointOutsideDomain(OctmeshError, ValueError):
    pass


class LevelOutOfRange(OctmeshError, ValueError):
    pass


class KeyOverflow(OctmeshError, OverflowError):
    """Raised when a key prefix does not fit the requested integer width."""


class MaxDepthExceeded(OctmeshError):
    pass


class NotALeaf(OctmeshError, KeyError):
    pass


class KeyNotFound(OctmeshError, KeyError):
    pass


class ChildrenNotLeaves(OctmeshError):
    pass


class WouldViolateBalance(OctmeshError):
    pass


class InconsistentPartition(OctmeshError):
    pass


class UnbalancedTree(OctmeshError):
    pass


class UnsupportedBackend(OctmeshError):
    pass


class MalformedStl(OctmeshError, ValueError):
    pass


class EmptyGeometry(OctmeshError, ValueError):
    pass


class NonTermination(OctmeshError, RuntimeError):
    pass
