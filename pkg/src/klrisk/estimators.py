"""Estimators of a discrete distribution from counts or an ordered sample.

* ``mle``: empirical frequencies n_i / n.
* ``add_constant``: additive smoothing (n_i + gamma) / (n + gamma K);
  gamma = 1 is Laplace, gamma = 1/2 is Krichevsky-Trofimov.
* ``add_gamma_vec``: per-category biases (n_i + gamma_i) / (n + sum gamma_i),
  with the adaptive profile of ``adaptive_gammas`` chosen from first-half
  counts.
* ``otb_estimate``: suffix average of the smoothed sequential predictors
  p_t(i) = (n_{i,t-1} + gamma_i) / (t - 1 + sum gamma_i) over the second half
  of the sample.

All outputs are valid ProbVecs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ProbVec, SampleSeq, prefix_counts


def _as_counts(counts, n: int, K: int | None = None) -> np.ndarray:
    arr = np.asarray(counts, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("counts must be a one-dimensional vector of length >= 2")
    if K is not None and arr.size != K:
        raise ValueError(f"expected {K} categories, got {arr.size}")
    if np.any(arr < 0):
        raise ValueError("counts must be non-negative")
    if int(arr.sum()) != n:
        raise ValueError(f"counts sum to {int(arr.sum())}, expected {n}")
    return arr


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")


def mle(counts, n: int) -> ProbVec:
    """Empirical frequencies counts(i) / n."""
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    arr = _as_counts(counts, n)
    return ProbVec(arr / n)


def add_constant(counts, n: int, gamma: float) -> ProbVec:
    """Additive smoothing (counts(i) + gamma) / (n + gamma K).

    gamma = 0 reduces to the MLE.  n = 0 with gamma > 0 gives the uniform
    distribution.
    """
    if gamma < 0.0:
        raise ValueError(f"gamma must be non-negative, got {gamma!r}")
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    arr = _as_counts(counts, n)
    denom = n + gamma * arr.size
    if denom <= 0.0:
        raise ValueError("no data and no smoothing: estimate undefined")
    return ProbVec((arr + gamma) / denom)


@dataclass(frozen=True)
class GammaProfile:
    """Per-category smoothing biases chosen from first-half counts.

    Categories whose first-half count falls below ``threshold`` form
    ``small_set`` (1-based) and receive the common positive bias
    max{1, ln(K/delta)/J}; all others receive zero.
    """

    gammas: np.ndarray
    small_set: tuple
    J: int
    threshold: float
    delta: float

    def __post_init__(self):
        arr = np.ascontiguousarray(self.gammas, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "gammas", arr)

    @property
    def K(self) -> int:
        return self.gammas.size

    @property
    def gamma_sum(self) -> float:
        return float(self.gammas.sum())


def constant_profile(K: int, gamma: float, delta: float = 0.5) -> GammaProfile:
    """Profile assigning the same bias to every category (testing aid)."""
    small = tuple(range(1, K + 1)) if gamma > 0 else ()
    return GammaProfile(
        gammas=np.full(K, float(gamma)),
        small_set=small,
        J=max(3, len(small)),
        threshold=math.inf,
        delta=delta,
    )


def adaptive_gammas(first_half_counts, K: int, n: int, delta: float) -> GammaProfile:
    """Choose per-category biases from the first-half counts.

    A category is "small" when its first-half count is strictly below
    32 ln(4K/delta); small categories share the bias max{1, ln(K/delta)/J}
    with J = max{3, number of small categories}, and all other categories
    get zero bias.
    """
    _check_delta(delta)
    arr = _as_counts(first_half_counts, n // 2, K)
    threshold = 32.0 * math.log(4.0 * K / delta)
    small_mask = arr < threshold
    small_set = tuple(int(i) + 1 for i in np.nonzero(small_mask)[0])
    J = max(3, len(small_set))
    gamma_val = max(1.0, math.log(K / delta) / J)
    gammas = np.where(small_mask, gamma_val, 0.0)
    return GammaProfile(
        gammas=gammas, small_set=small_set, J=J, threshold=threshold, delta=delta
    )


def add_gamma_vec(counts, n: int, profile: GammaProfile) -> ProbVec:
    """Per-category smoothing (counts(i) + gamma_i) / (n + sum gamma_i)."""
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    arr = _as_counts(counts, n, profile.K)
    denom = n + profile.gamma_sum
    if denom <= 0.0:
        raise ValueError("no data and no smoothing: estimate undefined")
    return ProbVec((arr + profile.gammas) / denom)


@dataclass(frozen=True)
class TrueSmallSet:
    """Population analogue of the small-count set: categories with
    n * p(i) strictly below 32 ln(K/delta)."""

    tilde_set: tuple
    tilde_J: int
    threshold: float


def true_small_set(p_star: ProbVec, n: int, delta: float) -> TrueSmallSet:
    """Categories whose expected count n * p(i) is below 32 ln(K/delta)."""
    _check_delta(delta)
    threshold = 32.0 * math.log(p_star.K / delta)
    mask = n * p_star.probs < threshold
    tilde = tuple(int(i) + 1 for i in np.nonzero(mask)[0])
    return TrueSmallSet(tilde_set=tilde, tilde_J=max(3, len(tilde)), threshold=threshold)


def p_plus(p_star: ProbVec, profile: GammaProfile, n: int) -> ProbVec:
    """Bias-shifted target (p(i) n + gamma_i) / (n + sum gamma_i)."""
    if p_star.K != profile.K:
        raise ValueError(f"dimension mismatch: {p_star.K} vs {profile.K}")
    denom = n + profile.gamma_sum
    return ProbVec((p_star.probs * n + profile.gammas) / denom)


def _otb_iterate_average_naive(
    seq: SampleSeq, profile: GammaProfile, m: int
) -> np.ndarray:
    """Reference average of the sequential predictors, one step at a time."""
    n = seq.n
    S = profile.gamma_sum
    acc = np.zeros(seq.K)
    for t in range(m + 1, n + 1):
        counts = prefix_counts(seq, t - 1)
        acc += (counts + profile.gammas) / (t - 1 + S)
    return acc / (n - m)


def _otb_iterate_average_fast(
    seq: SampleSeq, profile: GammaProfile, m: int
) -> np.ndarray:
    """O(n + K) average of the sequential predictors via suffix harmonic sums.

    With u = t - 1 ranging over m..n-1, the predictor at time u is
    (n_{i,u} + gamma_i) / (u + S).  An occurrence of category i at position
    s > m contributes 1/(u + S) for every u >= s, i.e. the suffix harmonic
    sum H(s) = sum_{u=s}^{n-1} 1/(u + S); the first-half counts contribute
    through H(m).
    """
    n = seq.n
    S = profile.gamma_sum
    inv = 1.0 / (np.arange(m, n, dtype=np.float64) + S)
    H = np.cumsum(inv[::-1])[::-1]  # H[j] = sum_{u=m+j}^{n-1} 1/(u+S)
    first = prefix_counts(seq, m)
    acc = (first + profile.gammas) * H[0]
    if n - 1 > m:
        positions = np.arange(m + 1, n)
        cats = seq.items[positions - 1] - 1
        acc += np.bincount(cats, weights=H[positions - m], minlength=seq.K)
    return acc / (n - m)


def otb_estimate(seq: SampleSeq, delta: float, naive: bool = False) -> ProbVec:
    """Suffix-averaged online-to-batch estimate from an ordered sample.

    The smoothing profile is chosen from the first-half counts (m = n // 2),
    then the sequential predictors p_t for t = m+1..n are averaged.  The
    ``naive`` flag switches to the step-by-step reference computation kept
    for oracle tests.
    """
    _check_delta(delta)
    n = seq.n
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    m = n // 2
    profile = adaptive_gammas(prefix_counts(seq, m), seq.K, n, delta)
    if naive:
        return ProbVec(_otb_iterate_average_naive(seq, profile, m))
    return ProbVec(_otb_iterate_average_fast(seq, profile, m))


@dataclass(frozen=True)
class EstimatorSpec:
    """Tagged description of an estimator.

    kind is one of "mle", "add_constant" (with gamma), "adaptive" (with
    delta) or "otb" (with delta).
    """

    kind: str
    gamma: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in ("mle", "add_constant", "adaptive", "otb"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "add_constant":
            if self.gamma is None or self.gamma < 0.0:
                raise ValueError("add_constant requires gamma >= 0")
        elif self.kind in ("adaptive", "otb"):
            if self.delta is None or not 0.0 < self.delta < 1.0:
                raise ValueError(f"{self.kind} requires delta in (0, 1)")

    @classmethod
    def mle(cls) -> "EstimatorSpec":
        return cls(kind="mle")

    @classmethod
    def add_constant(cls, gamma: float) -> "EstimatorSpec":
        return cls(kind="add_constant", gamma=float(gamma))

    @classmethod
    def adaptive(cls, delta: float) -> "EstimatorSpec":
        return cls(kind="adaptive", delta=float(delta))

    @classmethod
    def otb(cls, delta: float) -> "EstimatorSpec":
        return cls(kind="otb", delta=float(delta))

    @classmethod
    def parse(cls, text: str) -> "EstimatorSpec":
        """Parse CLI notation: mle | laplace | kt | addgamma:G | adaptive:D | otb:D."""
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        if name == "mle":
            return cls.mle()
        if name == "laplace":
            return cls.add_constant(1.0)
        if name == "kt":
            return cls.add_constant(0.5)
        if name in ("addgamma", "adaptive", "otb"):
            if not arg:
                raise ValueError(f"estimator {name!r} needs a numeric argument")
            value = float(arg)
            if name == "addgamma":
                return cls.add_constant(value)
            return cls(kind=name, delta=value)
        raise ValueError(f"unknown estimator {text!r}")

    @property
    def label(self) -> str:
        """Round-trippable CLI notation for this estimator."""
        if self.kind == "mle":
            return "mle"
        if self.kind == "add_constant":
            return f"addgamma:{self.gamma:.12g}"
        return f"{self.kind}:{self.delta:.12g}"

    @property
    def order_dependent(self) -> bool:
        """Whether the estimate depends on sample order (not just counts)."""
        return self.kind == "otb"

    @property
    def half_split_dependent(self) -> bool:
        """Whether the estimate depends on the first-half/second-half split."""
        return self.kind in ("adaptive", "otb")


def fit(spec: EstimatorSpec, seq: SampleSeq) -> ProbVec:
    """Fit the described estimator to an ordered sample."""
    n = seq.n
    if spec.kind == "mle":
        return mle(prefix_counts(seq, n), n)
    if spec.kind == "add_constant":
        return add_constant(prefix_counts(seq, n), n, spec.gamma)
    if spec.kind == "adaptive":
        profile = adaptive_gammas(prefix_counts(seq, n // 2), seq.K, n, spec.delta)
        return add_gamma_vec(prefix_counts(seq, n), n, profile)
    return otb_estimate(seq, spec.delta)
