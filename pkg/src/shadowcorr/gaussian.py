"""Scalar standard-normal primitives: density, upper tail Q(x) and its inverse.

Q is evaluated as erfc(x / sqrt(2)) / 2, which keeps full relative precision
in the upper tail (it never forms 1 - Phi(x)).  The inverse is a safeguarded
Newton iteration on log Q inside a fixed bracket.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = ["normal_pdf", "q_function", "q_inverse", "q_array", "pdf_array"]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_BRACKET = 40.0


def _finite(x: float, name: str = "x") -> float:
    try:
        x = float(x)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name} must be a real number, got {x!r}") from exc
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def normal_pdf(x: float) -> float:
    """Standard normal density exp(-x^2/2) / sqrt(2*pi)."""
    x = _finite(x)
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def q_function(x: float) -> float:
    """Upper tail probability P(Z > x) of a standard normal variable.

    Relative accuracy is close to machine precision for x >= 0 as long as the
    result is a normal (not subnormal) double, i.e. up to about x = 37.5.

    >>> q_function(0.0)
    0.5
    """
    x = _finite(x)
    return 0.5 * math.erfc(x * _INV_SQRT2)


def q_array(x: np.ndarray) -> np.ndarray:
    """Vectorised Q for internal quadrature kernels (no input validation)."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) * _INV_SQRT2)


def pdf_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def _initial_guess(p: float) -> float:
    # Rational approximation for the upper-tail quantile, |error| < 4.5e-4.
    t = math.sqrt(-2.0 * math.log(p))
    num = 2.515517 + t * (0.802853 + t * 0.010328)
    den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))
    return t - num / den


def _q_inverse_upper(p: float) -> float:
    """Solve Q(x) = p for 0 < p < 0.5; the root lies in (0, 40]."""
    log_p = math.log(p)
    lo, hi = 0.0, _BRACKET
    x = min(max(_initial_guess(p), lo), hi)
    for _ in range(200):
        q = q_function(x)
        if q == 0.0:
            hi = x
            x = 0.5 * (lo + hi)
            continue
        g = math.log(q) - log_p
        if g == 0.0:
            return x
        if g > 0.0:
            lo = x
        else:
            hi = x
        # d/dx log Q(x) = -pdf(x) / Q(x)
        step = g * q / normal_pdf(x)
        x_new = x + step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4.0 * math.ulp(x) or hi - lo <= 4.0 * math.ulp(hi):
            return x_new
        x = x_new
    return x


def q_inverse(p: float) -> float:
    """Return x with Q(x) = p, for 0 < p < 1.

    Raises DomainError for p outside the open unit interval.

    >>> round(q_inverse(1e-4), 5)
    3.71902
    """
    p = _finite(p, "p")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in the open interval (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return _q_inverse_upper(p)
    # 1 - p is exact for p in [0.5, 1)
    return -_q_inverse_upper(1.0 - p)
