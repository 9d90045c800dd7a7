"""Probability vectors on a finite alphabet [K], seeded i.i.d. sampling, and
prefix-count bookkeeping.

Categories are 1-based everywhere a user can see them (documentation, sample
items, error messages, file I/O); internal numpy arrays are 0-based and never
leak.
"""

import json
from dataclasses import dataclass

import numpy as np

# Strict tolerance enforced on every constructed ProbVec.
SUM_TOL = 1e-12
# Lenient tolerance for external inputs, which are then renormalized.
SUM_TOL_INPUT = 1e-9
# Entries in [-NEG_CLAMP, 0) are treated as rounding noise and clamped to 0.
NEG_CLAMP = 1e-15

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class ProbVec:
    """Immutable probability vector over the alphabet [K] = {1, ..., K}."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.probs, dtype=np.float64).copy()
        if arr.ndim != 1:
            raise ValueError("probability vector must be one-dimensional")
        if arr.size < 2:
            raise ValueError(f"alphabet size must be at least 2, got {arr.size}")
        if np.any(arr < 0.0):
            i = int(np.argmax(arr < 0.0))
            raise ValueError(f"negative probability {arr[i]!r} at category {i + 1}")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(
                f"probabilities sum to {total!r}; must equal 1 within {SUM_TOL}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def K(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, ProbVec):
            return NotImplemented
        return self.probs.shape == other.probs.shape and bool(
            np.all(self.probs == other.probs)
        )


def uniform(K: int) -> ProbVec:
    """Uniform distribution on [K]."""
    return ProbVec(np.full(K, 1.0 / K))


def validate_prob_vec(raw) -> ProbVec:
    """Validate an untrusted sequence of reals as a probability vector.

    Entries in [-1e-15, 0) are clamped to zero and the vector is renormalized,
    so long as the raw sum is within 1e-9 of one.  Anything further off is
    rejected loudly.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty one-dimensional sequence of reals")
    if arr.size < 2:
        raise ValueError(f"alphabet size must be at least 2, got {arr.size}")
    if np.any(arr < -NEG_CLAMP):
        i = int(np.argmax(arr < -NEG_CLAMP))
        raise ValueError(f"negative probability {arr[i]!r} at category {i + 1}")
    arr = np.clip(arr, 0.0, None)
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL_INPUT:
        raise ValueError(
            f"probabilities sum to {total!r}; must equal 1 within {SUM_TOL_INPUT}"
        )
    return ProbVec(arr / total)


@dataclass(frozen=True)
class Seed:
    """Key of a counter-based random stream.

    Identical (master, stream) pairs produce bit-identical samples, and
    distinct streams under one master are statistically independent, so
    Monte Carlo trials can run in any order.
    """

    master: int
    stream: int = 0

    def __post_init__(self):
        for name in ("master", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v <= _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SampleSeq:
    """An ordered i.i.d. sample x_1..x_n with items in [K]."""

    items: np.ndarray
    K: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.items, dtype=np.int64).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("sample must be a non-empty one-dimensional sequence")
        if self.K < 2:
            raise ValueError(f"alphabet size must be at least 2, got {self.K}")
        if np.any(arr < 1) or np.any(arr > self.K):
            bad = int(np.argmax((arr < 1) | (arr > self.K)))
            raise ValueError(
                f"item {arr[bad]} at position {bad + 1} outside [1, {self.K}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "items", arr)

    @property
    def n(self) -> int:
        return self.items.size


def sample_iid(p: ProbVec, n: int, seed: Seed) -> SampleSeq:
    """Draw n i.i.d. samples from p, deterministically given the seed.

    Inverse-CDF sampling on the cumulative sums of p, driven by a
    counter-based generator keyed by (master, stream).
    """
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    rng = seed.generator()
    cum = np.cumsum(p.probs)
    u = rng.random(n)
    idx = np.searchsorted(cum, u, side="right")
    np.clip(idx, 0, p.K - 1, out=idx)  # u may land past cum[-1] by rounding
    return SampleSeq(items=idx + 1, K=p.K)


def prefix_counts(seq: SampleSeq, t: int) -> np.ndarray:
    """Occurrence counts of each category among the first t items.

    t = 0 gives the all-zero vector; t = n gives the full counts.
    """
    if not 0 <= t <= seq.n:
        raise ValueError(f"prefix length {t} outside [0, {seq.n}]")
    return np.bincount(seq.items[:t], minlength=seq.K + 1)[1:]


def load_distribution(path) -> ProbVec:
    """Read a distribution file: one real per line, or a JSON array of reals."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        values = json.loads(text)
    else:
        values = [float(line) for line in text.splitlines() if line.strip()]
    return validate_prob_vec(values)


def save_distribution(path, p: ProbVec) -> None:
    """Write a distribution as one real per line, round-trip exact."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in p.probs:
            fh.write(repr(float(v)) + "\n")


def load_sample(path, K: int | None = None) -> SampleSeq:
    """Read a sample file of one category index per line.

    K defaults to the largest index present.
    """
    with open(path, "r", encoding="utf-8") as fh:
        items = [int(line) for line in fh.read().splitlines() if line.strip()]
    if not items:
        raise ValueError(f"no sample items found in {path}")
    if K is None:
        K = max(max(items), 2)
    return SampleSeq(items=np.asarray(items, dtype=np.int64), K=K)
