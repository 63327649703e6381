"""Exception hierarchy for firetree."""


class FiretreeError(Exception):
    """Base class for all library errors."""


class TreeError(FiretreeError, ValueError):
    pass


class CycleDetected(TreeError):
    pass


class MultipleRoots(TreeError):
    pass


class DanglingParent(TreeError):
    pass


class InstanceError(FiretreeError, ValueError):
    pass


class InvalidFixing(FiretreeError, ValueError):
    pass


class OverlappingFixings(FiretreeError, ValueError):
    pass


class PathOverloaded(FiretreeError, ValueError):
    pass


class ZeroBudgetLevel(FiretreeError, ValueError):
    pass


class AllZeroWeights(FiretreeError, ValueError):
    pass


class NonIntegralVertex(FiretreeError, AssertionError):
    """A re-optimization over tight vertices returned a fractional point."""


class CertificateError(FiretreeError, AssertionError):
    """A runtime certificate derived from a proof step failed to hold."""


class ResourceCapExceeded(FiretreeError):
    pass


class EnumerationBudgetExceeded(ResourceCapExceeded):
    pass


class InstanceTooLarge(ResourceCapExceeded):
    pass


class BadShape(FiretreeError, ValueError):
    pass
