"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies rather than bare ValueError.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, malformed flags, bad parameter combos."""


class DataError(ValueError):
    """Invalid input data: missing columns, non-binary labels, NaNs, degenerate arms."""


class NumericError(ArithmeticError):
    """Numerical failure: NaN in an integrand, quadrature out of tolerance,
    Cholesky failure that survives jitter."""
