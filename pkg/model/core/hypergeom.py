"""
Hypergeometric probability mass function.

Hy(a; B, A, b) is the probability of drawing exactly a successes when b objects
are drawn without replacement from B objects of which A are successes. Binomial
coefficients with out-of-range arguments count as zero, so the function is
defined for every integer input whose denominator C(B, b) is nonzero.

Populations up to EXACT_LIMIT use exact integer arithmetic; larger ones are
evaluated in log space through scipy's log-gamma.
"""

from __future__ import annotations

import math
from fractions import Fraction

from scipy.special import gammaln

from model.core.errors import UndefinedPmfError

EXACT_LIMIT = 1000


def _comb(n, k):
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _log_comb(n, k):
    if n < 0 or k < 0 or k > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def hypergeom_pmf_exact(a, B, A, b):
    """
    Exact rational value of Hy(a; B, A, b).

    Raises:
        UndefinedPmfError: If C(B, b) is zero.
    """
    denominator = _comb(B, b)
    if denominator == 0:
        raise UndefinedPmfError(f"C({B}, {b}) is zero; Hy(a; {B}, {A}, {b}) is undefined")
    return Fraction(_comb(A, a) * _comb(B - A, b - a), denominator)


def hypergeom_pmf(a, B, A, b):
    """
    Evaluates Hy(a; B, A, b) = C(A, a) C(B - A, b - a) / C(B, b).

    Args:
        a (int): Number of successes drawn.
        B (int): Population size.
        A (int): Number of successes in the population.
        b (int): Number of draws.

    Returns:
        float: The probability, zero whenever a numerator binomial is out of range.

    Raises:
        UndefinedPmfError: If C(B, b) is zero (for example b > B or B < 0).
    """
    if B <= EXACT_LIMIT:
        return float(hypergeom_pmf_exact(a, B, A, b))
    log_denominator = _log_comb(B, b)
    if log_denominator == -math.inf:
        raise UndefinedPmfError(f"C({B}, {b}) is zero; Hy(a; {B}, {A}, {b}) is undefined")
    log_numerator = _log_comb(A, a) + _log_comb(B - A, b - a)
    if log_numerator == -math.inf:
        return 0.0
    return math.exp(log_numerator - log_denominator)
