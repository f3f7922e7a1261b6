"""Error types shared across the toolkit.

Validation problems found by ``validate`` are returned as data, not raised;
these exceptions cover operations that cannot produce a meaningful result.
"""


class ToolkitError(Exception):
    """Base class for all bwrnet errors."""

    exit_code = 1


class ValidationError(ToolkitError):
    """A model or scenario document failed validation."""

    exit_code = 2

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class PreconditionError(ToolkitError):
    """An operation was called outside its documented domain."""

    exit_code = 3


class CapacityError(ToolkitError):
    """A request exceeds a documented size cap."""

    exit_code = 4
