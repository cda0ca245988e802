"""
Validation utilities for model parameters, grids and solver settings.
"""

import math


def require_finite(name: str, value: float) -> None:
    """Raise ValueError if ``value`` is NaN or infinite."""
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def require_nonnegative(name: str, value: float) -> None:
    """Raise ValueError unless ``value`` is a finite number >= 0."""
    require_finite(name, value)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")


def require_positive(name: str, value: float) -> None:
    """Raise ValueError unless ``value`` is a finite number > 0."""
    require_finite(name, value)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
