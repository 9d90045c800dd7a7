"""Adversarial lower-bound instances for KL risk.

Two constructions:

* ``build_attack``: probe an estimator with the all-K sample, then place a
  small atom alpha/n on the probed estimator's most-neglected category among
  [K-1].  With probability above delta the sample again shows only category
  K and the estimator incurs at least the closed-form ``bound``.
* ``hard_family``: the family P_2..P_K putting 1 - alpha/n on category 1 and
  alpha/n on category j.  Every member assigns probability above delta to
  the all-ones sample, and each is (alpha/n) ln(K-1) away in KL from the
  family's uniform mixture.

Throughout, alpha = (2/3) ln(1/delta).
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ProbVec, SampleSeq
from .estimators import EstimatorSpec, fit


@dataclass(frozen=True)
class AdversarialInstance:
    """An attack distribution with its closed-form risk lower bound."""

    p_star: ProbVec
    alpha: float
    attacked_index: int  # i' in [K-1], 1-based
    bound: float  # +inf when the probed estimator puts no mass on [K-1]
    delta: float
    probe_mass: float  # s = sum of probed output over [K-1]


def probe_zero_counts(spec: EstimatorSpec, K: int, n: int) -> ProbVec:
    """Run the estimator on the sample consisting solely of category K."""
    if K < 2:
        raise ValueError(f"alphabet size must be at least 2, got {K}")
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    seq = SampleSeq(items=np.full(n, K, dtype=np.int64), K=K)
    return fit(spec, seq)


def build_attack(p_hat0: ProbVec, K: int, n: int, delta: float) -> AdversarialInstance:
    """Construct the attack distribution against a probed estimator output.

    Requires n > (4/3) ln(1/delta) so the small atom alpha/n is at most 1/2.
    The attacked index is the lowest-index argmin of p_hat0 over [K-1].
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if p_hat0.K != K:
        raise ValueError(f"dimension mismatch: {p_hat0.K} vs {K}")
    ln1d = math.log(1.0 / delta)
    if n <= (4.0 / 3.0) * ln1d:
        raise ValueError(
            f"need n > (4/3) ln(1/delta) = {(4.0 / 3.0) * ln1d:.6g}, got n = {n}"
        )
    alpha = (2.0 / 3.0) * ln1d
    head = p_hat0.probs[: K - 1]
    i_prime = int(np.argmin(head)) + 1  # lowest index wins ties
    s = float(head.sum())
    if s == 0.0:
        bound = math.inf
    else:
        bound = (2.0 * ln1d / (3.0 * n)) * (
            math.log(2.0 * ln1d * (K - 1) / (3.0 * n * s)) - 1.0
        ) + s
    probs = np.zeros(K)
    probs[i_prime - 1] = alpha / n
    probs[K - 1] = 1.0 - alpha / n
    return AdversarialInstance(
        p_star=ProbVec(probs),
        alpha=alpha,
        attacked_index=i_prime,
        bound=bound,
        delta=delta,
        probe_mass=s,
    )


def attack_instance(
    spec: EstimatorSpec, K: int, n: int, delta: float
) -> AdversarialInstance:
    """Probe the estimator with the all-K sample and attack it."""
    return build_attack(probe_zero_counts(spec, K, n), K, n, delta)


def attack_event_probability(alpha: float, n: int) -> float:
    """Exact probability (1 - alpha/n)^n of the all-K sample under the attack.

    Valid for n > 2 alpha, where it strictly exceeds exp(-3 alpha / 2).
    """
    if alpha < 0.0:
        raise ValueError(f"alpha must be non-negative, got {alpha!r}")
    if n <= 2.0 * alpha:
        raise ValueError(f"need n > 2 alpha = {2.0 * alpha:.6g}, got n = {n}")
    return (1.0 - alpha / n) ** n


@dataclass(frozen=True)
class HardFamily:
    """The two-atom family P_j, j = 2..K, around a heavy first category."""

    members: tuple  # ProbVec for each j
    indices: tuple  # the j of each member
    alpha: float
    separation: float  # KL(P_j || uniform mixture) = (alpha/n) ln(K-1)
    pairwise_mixture_kl: float  # KL(P_j || (P_j + P_k)/2) = (alpha/n) ln 2

    def mixture(self) -> ProbVec:
        """Uniform mixture of the members."""
        stack = np.stack([m.probs for m in self.members])
        return ProbVec(stack.mean(axis=0))


def hard_family(K: int, n: int, delta: float) -> HardFamily:
    """Build P_2..P_K with mass 1 - alpha/n on category 1 and alpha/n on j."""
    if K < 2:
        raise ValueError(f"alphabet size must be at least 2, got {K}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    alpha = (2.0 / 3.0) * math.log(1.0 / delta)
    if alpha > n / 2.0:
        raise ValueError(
            f"need alpha = (2/3) ln(1/delta) <= n/2; got alpha = {alpha:.6g}, n = {n}"
        )
    members = []
    indices = []
    for j in range(2, K + 1):
        probs = np.zeros(K)
        probs[0] = 1.0 - alpha / n
        probs[j - 1] = alpha / n
        members.append(ProbVec(probs))
        indices.append(j)
    return HardFamily(
        members=tuple(members),
        indices=tuple(indices),
        alpha=alpha,
        separation=(alpha / n) * math.log(K - 1),
        pairwise_mixture_kl=(alpha / n) * math.log(2.0),
    )
