"""The iterated integral of (1 - c s^2)^n and its n^{-1/2} decay.

The double integral over the triangle 0 <= s < t <= c' reduces to a single
integral int_0^{c'} (c' - s)(1 - c s^2)^n ds; at c = c' = 1 it has an exact
closed form through a terminating Gauss hypergeometric sum, whose value is
in turn pinned by the Gauss summation theorem.  The decay rate in n is
extracted by a log-log least-squares fit.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .specfun import gamma_ln, hyp2f1_terminating

__all__ = [
    "DecaySeries",
    "fit_decay_exponent",
    "gauss_theorem_value",
    "iter_integral_closed_form",
    "iter_integral_quadrature",
    "iter_integral_series",
    "series_to_csv",
]


@dataclass(frozen=True)
class DecaySeries:
    """Positive series values with a fitted log-log power law."""

    entries: tuple
    fitted_slope: float
    fitted_log_constant: float
    fit_window: tuple
    residual: float


def _check_domain(c, c_prime, n):
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    if n < 0 or n != int(n):
        raise DomainError(f"n must be a nonnegative integer, got {n}")
    limit = c ** -0.5
    if not 0.0 < c_prime <= limit:
        # the boundary c' = c^{-1/2} is allowed: that is where the closed
        # form lives (the integrand touches 0 only at the endpoint)
        raise DomainError(
            f"c' must lie in (0, c^(-1/2)] = (0, {limit:g}], got {c_prime}")


def iter_integral_quadrature(c: float, c_prime: float, n: int) -> float:
    """Double integral of (1 - c s^2)^n over 0 <= s < t <= c'.

    The inner t-integral is analytic, leaving
    int_0^{c'} (c' - s)(1 - c s^2)^n ds, evaluated adaptively to absolute
    error <= 1e-12.
    """
    _check_domain(c, c_prime, n)
    n = int(n)

    def f(s):
        return (c_prime - s) * (1.0 - c * s * s) ** n

    # the integrand concentrates on a ~ (c n)^{-1/2} neighborhood of 0
    val, err = quad(f, 0.0, c_prime, epsabs=1e-13, epsrel=1e-12, limit=200)
    if err > 1e-12:
        val, err = quad(f, 0.0, c_prime, epsabs=1e-13, epsrel=1e-12,
                        limit=500, points=[min(c_prime, (c * (n + 1)) ** -0.5)])
    return val


def iter_integral_closed_form(n: int) -> float:
    """Exact value at c = c' = 1 via the terminating hypergeometric sum:
    (1/(2(n+1))) (2F1(-1/2, -n-1; 1/2; 1) - 1)."""
    if n < 0 or n != int(n):
        raise DomainError(f"n must be a nonnegative integer, got {n}")
    f = hyp2f1_terminating(-0.5, -(int(n) + 1), 0.5, 1.0)
    return (f - 1.0) / (2.0 * (n + 1))


def gauss_theorem_value(n: int) -> float:
    """sqrt(pi) Gamma(n+2) / Gamma(n+3/2), the Gauss-summation value of the
    terminating 2F1 above."""
    if n < 0 or n != int(n):
        raise DomainError(f"n must be a nonnegative integer, got {n}")
    return math.sqrt(math.pi) * math.exp(
        gamma_ln(n + 2.0) - gamma_ln(n + 1.5))


def iter_integral_series(c: float, c_prime: float, n_values) -> list:
    """(n, value) pairs of the iterated integral over the given n grid."""
    return [(int(n), iter_integral_quadrature(c, c_prime, n))
            for n in n_values]


def fit_decay_exponent(entries) -> DecaySeries:
    """Least-squares power-law fit on log-log axes.

    ``entries`` is a sequence of (n, value) pairs with positive values;
    fewer than two distinct n make the fit degenerate.
    """
    entries = tuple((int(n), float(v)) for n, v in entries)
    if any(v <= 0.0 for _, v in entries):
        raise DomainError("decay fit requires strictly positive values")
    ns = np.array([n for n, _ in entries], dtype=float)
    if np.unique(ns).size < 2:
        raise DomainError("decay fit requires at least two distinct n")
    logs = np.log(np.array([v for _, v in entries]))
    slope, intercept = np.polyfit(np.log(ns), logs, 1)
    resid = float(np.max(np.abs(
        logs - (slope * np.log(ns) + intercept))))
    return DecaySeries(entries, float(slope), float(intercept),
                       (int(ns.min()), int(ns.max())), resid)


def series_to_csv(entries) -> str:
    """CSV text of (n, value) pairs with header ``n,value``."""
    lines = ["n,value"]
    for n, v in entries:
        lines.append(f"{int(n)},{v!r}")
    return "\n".join(lines) + "\n"
