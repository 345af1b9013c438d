"""Exception types shared across the package."""


class DecayCertError(Exception):
    """Base class for all errors raised by decay_cert."""


class DomainError(DecayCertError, ValueError):
    """A parameter lies outside the admissible domain of an operation."""


class RangeError(DecayCertError, ValueError):
    """A tabulated quantity was queried outside its grid span."""


class InfeasibleError(DecayCertError, ValueError):
    """No admissible envelope exists; ``constraint`` names the binding one."""

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class NumericalFailure(DecayCertError, RuntimeError):
    """A numerical post-check (residual, cross-check) did not pass."""


class ScenarioError(DecayCertError, ValueError):
    """Aggregated validation failure for a scenario file."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {p}" for p in self.problems))
