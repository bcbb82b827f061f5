from __future__ import annotations


class LandscapeError(Exception):
    """
    Base class for every error raised by the landscape library
    """


class ConfigError(LandscapeError):
    pass


class PresetError(LandscapeError, ValueError):
    pass


class InvalidSystemError(LandscapeError):
    def __init__(self, violations: list):
        self.violations: list = violations
        listing = "; ".join(str(violation) for violation in violations)
        super().__init__(f"ERROR: invalid system/objective: {listing}")


class PropagationError(LandscapeError):
    pass


class NumericalError(LandscapeError):
    pass


class GridMismatchError(LandscapeError, ValueError):
    pass


class FlowError(LandscapeError):
    pass


class FlowStallError(FlowError):
    pass


class FlowConvergenceError(FlowError):
    pass


class BatchRunError(LandscapeError):
    def __init__(self, run_id: int, seed: int, cause: Exception):
        self.run_id: int = run_id
        self.seed: int = seed
        self.cause: Exception = cause
        super().__init__(f"ERROR: run {run_id} (seed {seed}) failed: {cause}")
