"""Exception types shared across the solver modules."""


class UnknownItem(ValueError):
    """A bundle referenced an item outside the valuation's domain."""


class AgentNotEndowable(ValueError):
    """No single item has positive value, so the shifted valuation is undefined."""


class InfeasibleMatching(ValueError):
    """A perfect-on-agents matching was requested with more agents than columns."""


class AllocationError(ValueError):
    """Structurally invalid allocation: overlapping bundles or foreign ids."""


class SizeGuardExceeded(ValueError):
    """Exhaustive enumeration would exceed the configured size guard."""


class LemmaViolation(Exception):
    """A certified property failed on concrete data; signals a solver bug.

    Carries the offending agent id (when one exists) and a human-readable
    description of the failed inequality.
    """

    def __init__(self, message: str, agent: str | None = None):
        super().__init__(message)
        self.agent = agent


class InvariantViolation(RuntimeError):
    """An internal loop or counter left its provable range."""
