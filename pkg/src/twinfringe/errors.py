"""Exception types shared across the package.

The CLI maps these onto exit codes: config errors -> 2, regime refusals -> 3,
numerical non-convergence -> 4. Everything else is an ordinary ValueError.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Bad or inconsistent run configuration.

    ``line`` carries the 1-based line number in the config file when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RegimeError(RuntimeError):
    """A computation was refused because the optical regime validation failed."""

    def __init__(self, message: str, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class ConvergenceError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class EmptyEnsembleError(ValueError):
    """Every conditioning branch was annihilated; no ensemble remains."""


class UndefinedVisibilityError(ValueError):
    """Visibility is undefined (pattern identically zero)."""


class CausalOrderError(ValueError):
    """Bob's measurement time precedes Alice's choice time."""
