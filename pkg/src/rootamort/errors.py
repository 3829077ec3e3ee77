"""Exception hierarchy shared by every module."""


class RootAmortError(Exception):
    pass


class DomainError(RootAmortError, ValueError):
    """Input outside an operation's mathematical domain."""


class SingularityError(DomainError):
    """Evaluation point coincides with a root enclosure."""


class ResourceError(RootAmortError, RuntimeError):
    """Precision, depth, or work budget exhausted before a decision."""
