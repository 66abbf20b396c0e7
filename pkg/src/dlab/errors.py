"""Exception hierarchy shared by every dlab module."""


class DlabError(Exception):
    """Base class for all library errors."""


class ExhaustedQuotients(DlabError):
    """The partial-quotient stream ended before the requested depth or precision."""


class InsufficientDepth(DlabError):
    pass


class InfeasibleGrowth(DlabError):
    """No partial quotient places the next denominator inside the requested band."""


class PrecisionConflict(DlabError):
    """Enclosures stayed too wide to decide a comparison, even after escalation."""


class ScheduleTooThin(DlabError):
    """A schedule level has fewer orbit points than the group count q_{n_i}."""


class InvalidK(DlabError):
    pass


class EmptyIntersection(DlabError):
    """A nested level retained no components; the schedule grows too slowly."""


class FamilyGap(DlabError):
    """An error function was evaluated outside the range its parameters define."""


class NotDecreasing(DlabError):
    pass


class InvalidInputs(DlabError):
    pass


class BudgetExceeded(DlabError):
    """Exact construction would enumerate more arcs than the configured budget."""
