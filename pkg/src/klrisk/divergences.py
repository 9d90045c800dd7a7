"""Extended-real divergences between probability vectors.

All logarithms are natural.  Divergence values are non-negative floats where
+inf is represented by ``math.inf``: IEEE infinity orders and adds
consistently, and the formatting helpers below serialize it as the
unambiguous string "inf".  The chi-square convention here is that the
*second* argument supplies the denominator: chi2(p, q) = sum (p-q)^2 / q.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ProbVec

# Absolute slack allowed on every inequality check; double-precision
# accumulation over K <= 1e4 terms stays well under this.
INEQ_TOL = 1e-12


def _check_pair(p: ProbVec, q: ProbVec) -> None:
    if p.K != q.K:
        raise ValueError(f"dimension mismatch: {p.K} vs {q.K}")


def kl(p: ProbVec, q: ProbVec) -> float:
    """KL divergence sum_i p(i) ln(p(i)/q(i)), with 0 ln 0 = 0.

    Returns +inf exactly when q assigns zero mass to a category p supports.
    """
    _check_pair(p, q)
    a, b = p.probs, q.probs
    mask = a > 0.0
    if np.any(b[mask] == 0.0):
        return math.inf
    am = a[mask]
    return float(np.sum(am * np.log(am / b[mask])))


def chi2(p: ProbVec, q: ProbVec) -> float:
    """Chi-square divergence sum_i (p(i)-q(i))^2 / q(i).

    Terms with p(i) = q(i) = 0 contribute 0; +inf when q(i) = 0 but
    p(i) != q(i).
    """
    _check_pair(p, q)
    a, b = p.probs, q.probs
    diff = a - b
    if np.any((b == 0.0) & (diff != 0.0)):
        return math.inf
    mask = b > 0.0
    return float(np.sum(diff[mask] ** 2 / b[mask]))


def hellinger_sq(p: ProbVec, q: ProbVec) -> float:
    """Squared Hellinger distance sum_i (sqrt(p(i)) - sqrt(q(i)))^2, in [0, 2]."""
    _check_pair(p, q)
    return float(np.sum((np.sqrt(p.probs) - np.sqrt(q.probs)) ** 2))


def l1(p: ProbVec, q: ProbVec) -> float:
    """Total-variation style l1 distance sum_i |p(i) - q(i)|, in [0, 2]."""
    _check_pair(p, q)
    return float(np.sum(np.abs(p.probs - q.probs)))


def pinsker_gap(p: ProbVec, q: ProbVec) -> float:
    """Slack KL(p||q) - l1(p,q)^2 / 2 of Pinsker's inequality; >= 0 (or +inf)."""
    v = kl(p, q)
    if math.isinf(v):
        return math.inf
    return v - 0.5 * l1(p, q) ** 2


@dataclass(frozen=True)
class ChainReport:
    """Seven scaled divergences that must be non-decreasing whenever the
    density ratio between the two arguments lies in [1/2, 2] both ways."""

    values: tuple
    monotone: bool


def chain_report(p: ProbVec, q: ProbVec) -> ChainReport:
    """Evaluate the seven-term divergence chain between p and q.

    Values, in claimed non-decreasing order:
      chi2(p||q)/6, chi2(q||p)/4, KL(p||q), 5/2 H^2(p||q),
      5/2 KL(q||p), 5/2 chi2(q||p), 5 chi2(p||q).
    Requires strictly positive entries and density ratio p(i)/q(i) in
    [1/2, 2] for every category.
    """
    _check_pair(p, q)
    a, b = p.probs, q.probs
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        i = int(np.argmax((a <= 0.0) | (b <= 0.0)))
        raise ValueError(f"chain requires strictly positive entries (category {i + 1})")
    ratio = a / b
    too_big = ratio > 2.0 * (1.0 + INEQ_TOL)
    too_small = ratio < 0.5 / (1.0 + INEQ_TOL)
    if np.any(too_big | too_small):
        i = int(np.argmax(too_big | too_small))
        raise ValueError(
            f"density ratio {ratio[i]!r} at category {i + 1} outside [1/2, 2]"
        )
    values = (
        chi2(p, q) / 6.0,
        chi2(q, p) / 4.0,
        kl(p, q),
        2.5 * hellinger_sq(p, q),
        2.5 * kl(q, p),
        2.5 * chi2(q, p),
        5.0 * chi2(p, q),
    )
    monotone = all(
        values[i + 1] >= values[i] - INEQ_TOL for i in range(len(values) - 1)
    )
    return ChainReport(values=values, monotone=monotone)


def yang_barron_gap(p: ProbVec, q: ProbVec, r: ProbVec, V: float) -> float:
    """Slack of the second-moment-vs-first-moment log-ratio bound.

    For distributions q, r with r(i)/q(i) <= V everywhere and any p:

        sum_i p(i) ln(r(i)/q(i))^2
            <= (2 + ln V) * (sum_i p(i) ln(r(i)/q(i)) + sum_i p(i) q(i)/r(i) - 1)

    Returns right side minus left side, which is >= 0 (the bracketed factor
    is a p-weighted sum of ln x + 1/x - 1 >= 0 terms).
    """
    _check_pair(p, q)
    _check_pair(p, r)
    a, b, c = p.probs, q.probs, r.probs
    if np.any(b <= 0.0) or np.any(c <= 0.0):
        i = int(np.argmax((b <= 0.0) | (c <= 0.0)))
        raise ValueError(
            f"q and r must be strictly positive (category {i + 1})"
        )
    ratio = c / b
    if np.any(ratio > V * (1.0 + INEQ_TOL)):
        i = int(np.argmax(ratio > V * (1.0 + INEQ_TOL)))
        raise ValueError(
            f"ratio r/q = {ratio[i]!r} at category {i + 1} exceeds V = {V!r}"
        )
    log_ratio = np.log(ratio)
    first_moment = float(np.sum(a * log_ratio))
    second_moment = float(np.sum(a * log_ratio**2))
    inverse_term = float(np.sum(a * b / c))
    return (2.0 + math.log(V)) * (first_moment + inverse_term - 1.0) - second_moment


def format_value(x: float) -> str:
    """Render a value with 12 significant digits; +inf as the string "inf"."""
    if math.isinf(x):
        return "inf"
    return f"{x:.12g}"
