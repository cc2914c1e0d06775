"""Quadrature of narrow-Gaussian kernels against smooth test functions.

Two evaluators: the squared-score (Fisher-density) pairing of a sharp
Gaussian with a test function, and the plain expectation of a function
under a Gaussian kernel of small width, whose small-width expansion is
f(0) + (width/2)^2 f''(0) plus a higher-order remainder.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, NonConvergenceError

QUAD_ABS_TOL = 1e-10


def narrow_gaussian_fisher_integral(test_fn, a: float) -> float:
    """Integral of (g')^2 / g times the test function, g the normalized Gaussian
    of precision a: the integrand is 4 a^2 x^2 sqrt(a/pi) exp(-a x^2) test(x),
    integrated adaptively over |x| <= 10/sqrt(a).
    """
    if a <= 0.0:
        raise DomainError("gaussian precision must be positive")
    root_a = np.sqrt(a)
    amp = 4.0 * a * a * np.sqrt(a / np.pi)

    def integrand(x):
        return amp * x * x * np.exp(-a * x * x) * test_fn(x)

    value, err = quad(integrand, -10.0 / root_a, 10.0 / root_a,
                      epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=400)
    if not np.isfinite(value) or err > max(QUAD_ABS_TOL, 1e-8 * abs(value)):
        raise NonConvergenceError(f"quadrature failed to converge (err={err:g})")
    return float(value)


def gaussian_kernel_expectation(f, width: float) -> float:
    """Expectation of f under the Gaussian kernel exp(-(x/width)^2)/(width sqrt(pi))."""
    if width <= 0.0:
        raise DomainError("kernel width must be positive")
    amp = 1.0 / (width * np.sqrt(np.pi))

    def integrand(x):
        return amp * np.exp(-((x / width) ** 2)) * f(x)

    value, err = quad(integrand, -12.0 * width, 12.0 * width,
                      epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=400)
    if not np.isfinite(value) or err > max(QUAD_ABS_TOL, 1e-8 * abs(value)):
        raise NonConvergenceError(f"quadrature failed to converge (err={err:g})")
    return float(value)


def kernel_expansion_remainder(f, f0: float, f2: float, width: float) -> float:
    """|expectation - f(0) - (width/2)^2 f''(0)|, the expansion remainder."""
    return abs(gaussian_kernel_expectation(f, width) - f0 - (width / 2.0) ** 2 * f2)
