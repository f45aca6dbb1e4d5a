"""Exception types shared across the package."""


class WsensError(Exception):
    """Base class for all package-specific errors."""


class CollinearityError(WsensError, ValueError):
    """A design or conditioning matrix is rank deficient in the weighted metric."""


class ConvergenceError(WsensError, RuntimeError):
    """An iterative solver failed to converge."""


class BalanceError(WsensError, ValueError):
    """Balance constraints are infeasible for the given data."""


class DegenerateWeightsError(WsensError, ValueError):
    """Weights are all zero, negative, or leave a treatment arm empty."""


class BenchmarkError(WsensError, ValueError):
    """A benchmark specification yields an unusable bound (e.g. bound on the
    treatment-side parameter reaching or exceeding 1)."""
