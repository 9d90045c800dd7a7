"""Monte Carlo risk measurement, exact small-instance enumeration oracles,
predictor-ratio diagnostics, parameter sweeps, and CSV reporting.

Trials are embarrassingly parallel: trial t draws its sample from the
counter-based stream (master, t), so any execution order produces the same
sorted risk sample.  The delimited CSV output is the boundary of this
module; figure rendering lives in ``klrisk.plots`` and consumes the CSV.
"""

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import adversarial
from .distributions import ProbVec, SampleSeq, Seed, load_distribution, sample_iid, prefix_counts, uniform
from .divergences import INEQ_TOL, format_value, kl
from .estimators import (
    EstimatorSpec,
    adaptive_gammas,
    add_constant,
    add_gamma_vec,
    fit,
    mle,
    otb_estimate,
    p_plus,
)

ENUMERATION_LIMIT = 1_000_000

CSV_COLUMNS = [
    "estimator",
    "K",
    "n",
    "delta",
    "trials",
    "seed",
    "quantile",
    "mean_kl",
    "frac_infinite",
    "rate_K_over_n",
    "rate_logKlog1d_over_n",
]


def quantile_rank(delta: float, trials: int) -> int:
    """1-based order-statistic rank ceil((1 - delta) * trials).

    Computed as trials - floor(delta * trials) with a small nudge so that
    decimal deltas like 0.3 are not pushed across an integer boundary by
    binary rounding.
    """
    r = trials - math.floor(delta * trials + 1e-9)
    return min(max(r, 1), trials)


def empirical_quantile(sorted_values: np.ndarray, delta: float) -> float:
    """Upper empirical (1 - delta)-quantile of an ascending value sample."""
    return float(sorted_values[quantile_rank(delta, sorted_values.size) - 1])


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo cell: estimator, truth, sample size, level, budget."""

    estimator: EstimatorSpec
    p_star: ProbVec
    n: int
    delta: float
    trials: int
    seed: int
    pstar_label: str = "custom"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")


@dataclass(frozen=True)
class RiskReport:
    """Summary of the KL(p_star || fitted) sample over one cell's trials."""

    quantile: float  # upper (1 - delta)-quantile; +inf sorted last
    mean_kl: float  # +inf-absorbing mean
    frac_infinite: float
    trials: int
    config: TrialConfig
    kl_values: np.ndarray = field(repr=False, compare=False)  # ascending

    def csv_row(self) -> list:
        cfg = self.config
        return [
            cfg.estimator.label,
            str(cfg.p_star.K),
            str(cfg.n),
            format_value(cfg.delta),
            str(cfg.trials),
            str(cfg.seed),
            format_value(self.quantile),
            format_value(self.mean_kl),
            format_value(self.frac_infinite),
            format_value(cfg.p_star.K / cfg.n),
            format_value(math.log(cfg.p_star.K) * math.log(1.0 / cfg.delta) / cfg.n),
        ]


def run_trials(config: TrialConfig) -> RiskReport:
    """Sample, fit, and record KL(p_star || fitted) for each trial stream."""
    values = np.empty(config.trials)
    for t in range(config.trials):
        seq = sample_iid(config.p_star, config.n, Seed(config.seed, t))
        values[t] = kl(config.p_star, fit(config.estimator, seq))
    values.sort()
    return RiskReport(
        quantile=empirical_quantile(values, config.delta),
        mean_kl=float(values.mean()),
        frac_infinite=float(np.mean(np.isinf(values))),
        trials=config.trials,
        config=config,
        kl_values=values,
    )


def _log_factorial(k: int) -> float:
    return math.lgamma(k + 1)


def _multinomial_pmf(counts: np.ndarray, n: int, p: np.ndarray) -> float:
    """Exact multinomial probability; 0 when a zero-mass category has counts."""
    if np.any((p == 0.0) & (counts > 0)):
        return 0.0
    mask = counts > 0
    log_p = _log_factorial(n) - sum(_log_factorial(int(c)) for c in counts)
    log_p += float(np.sum(counts[mask] * np.log(p[mask])))
    return math.exp(log_p)


def _compositions(total: int, parts: int):
    """All ways of writing ``total`` as an ordered sum of ``parts`` >= 0."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _n_compositions(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


@dataclass(frozen=True)
class ExactRisk:
    """Exact distribution of the risk value over all sample outcomes."""

    values: np.ndarray  # ascending, +inf last
    probs: np.ndarray  # aligned with values, sums to 1
    quantile: float
    prob_infinite: float
    delta: float

    def quantile_at(self, level: float) -> float:
        """Smallest value v with P(risk <= v) >= level."""
        cdf = np.cumsum(self.probs)
        idx = int(np.searchsorted(cdf, level - INEQ_TOL, side="left"))
        return float(self.values[min(idx, self.values.size - 1)])


def _finalize_exact(pairs, delta: float) -> ExactRisk:
    values = np.array([v for v, _ in pairs])
    probs = np.array([w for _, w in pairs])
    order = np.argsort(values)  # numpy sorts +inf last
    values, probs = values[order], probs[order]
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise AssertionError(f"enumeration probabilities sum to {total!r}")
    probs = probs / total
    risk = ExactRisk(
        values=values,
        probs=probs,
        quantile=math.nan,
        prob_infinite=float(probs[np.isinf(values)].sum()),
        delta=delta,
    )
    object.__setattr__(risk, "quantile", risk.quantile_at(1.0 - delta))
    return risk


def exact_risk_enumeration(
    spec: EstimatorSpec,
    p_star: ProbVec,
    n: int,
    delta: float,
    metric=None,
) -> ExactRisk:
    """Exact risk distribution by enumerating every sample outcome.

    Count-sufficient estimators enumerate count vectors with multinomial
    weights; the adaptive estimator needs the first-half/second-half count
    split, and the order-dependent suffix-averaged estimator enumerates raw
    sequences.  The mode follows the estimator kind so an oracle can never
    silently use insufficient statistics.  ``metric(p_star, p_hat)``
    defaults to forward KL.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if metric is None:
        metric = kl
    K = p_star.K
    pairs = []
    if spec.kind in ("mle", "add_constant"):
        if _n_compositions(n, K) > ENUMERATION_LIMIT:
            raise ValueError(
                f"{_n_compositions(n, K)} count outcomes exceed the "
                f"enumeration limit {ENUMERATION_LIMIT}"
            )
        for counts in _compositions(n, K):
            arr = np.asarray(counts, dtype=np.int64)
            w = _multinomial_pmf(arr, n, p_star.probs)
            if w == 0.0:
                continue
            if spec.kind == "mle":
                p_hat = mle(arr, n)
            else:
                p_hat = add_constant(arr, n, spec.gamma)
            pairs.append((metric(p_star, p_hat), w))
    elif spec.kind == "adaptive":
        m = n // 2
        size = _n_compositions(m, K) * _n_compositions(n - m, K)
        if size > ENUMERATION_LIMIT:
            raise ValueError(
                f"{size} half-split outcomes exceed the enumeration limit "
                f"{ENUMERATION_LIMIT}"
            )
        for first in _compositions(m, K):
            first_arr = np.asarray(first, dtype=np.int64)
            w1 = _multinomial_pmf(first_arr, m, p_star.probs)
            if w1 == 0.0:
                continue
            profile = adaptive_gammas(first_arr, K, n, spec.delta)
            for second in _compositions(n - m, K):
                second_arr = np.asarray(second, dtype=np.int64)
                w2 = _multinomial_pmf(second_arr, n - m, p_star.probs)
                if w2 == 0.0:
                    continue
                p_hat = add_gamma_vec(first_arr + second_arr, n, profile)
                pairs.append((metric(p_star, p_hat), w1 * w2))
    elif spec.kind == "otb":
        if K**n > ENUMERATION_LIMIT:
            raise ValueError(
                f"{K**n} sequences exceed the enumeration limit {ENUMERATION_LIMIT}"
            )
        log_p = np.full(K, -math.inf)
        support = p_star.probs > 0.0
        log_p[support] = np.log(p_star.probs[support])
        for items in itertools.product(range(1, K + 1), repeat=n):
            ll = sum(log_p[i - 1] for i in items)
            if ll == -math.inf:
                continue
            seq = SampleSeq(items=np.asarray(items, dtype=np.int64), K=K)
            p_hat = otb_estimate(seq, spec.delta)
            pairs.append((metric(p_star, p_hat), math.exp(ll)))
    else:  # pragma: no cover - EstimatorSpec restricts kinds
        raise ValueError(f"no enumeration mode for estimator kind {spec.kind!r}")
    return _finalize_exact(pairs, delta)


# The five predictor ratios checked by ratio_diagnostics, in report order.
RATIO_NAMES = (
    "pstar_over_pt",
    "pt_over_pplus",
    "pplus_over_pt",
    "pstar_over_pplus",
    "late_over_early_counts",
)


@dataclass(frozen=True)
class RatioDiagnostics:
    """Worst observed predictor ratios against their per-trial caps.

    Rows index categories, columns follow RATIO_NAMES.  ``caps_at_worst``
    holds the cap that was in force in the trial achieving the worst
    ratio-to-cap quotient; ``violation_fraction`` is the fraction of trials
    in which any ratio exceeded its cap anywhere.
    """

    worst_ratios: np.ndarray
    caps_at_worst: np.ndarray
    worst_quotients: np.ndarray
    violation_fraction: float
    trials: int
    n: int
    delta: float


def ratio_diagnostics(
    p_star: ProbVec, n: int, delta: float, trials: int, seed: int
) -> RatioDiagnostics:
    """Check the high-probability caps on the sequential predictor ratios.

    Per trial, the adaptive profile is formed from the first-half counts and
    the predictors p_t for t in [n/2 + 1, n + 1] are compared to the truth
    and to the bias-shifted target p_plus:

        p*(i)/p_t(i) <= zeta_i xi,   p_t(i)/p+(i) <= zeta_i,
        p+(i)/p_t(i) <= 1 + zeta_i xi,   p*(i)/p+(i) <= xi,
        (n_{i,n} + g_i)/(n_{i,n/2} + g_i) <= 6 + zeta_i,

    with xi = 1 + sum(g)/n and
    zeta_i = 3 (1 + 2 (3 n_{i,n/2} + 27 ln(4K/d)) / max{g_i, n_{i,n/2}/2 - 9 ln(4K/d)}).
    """
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    K = p_star.K
    m = n // 2
    log_term = math.log(4.0 * K / delta)
    worst_q = np.zeros((K, 5))
    worst_r = np.zeros((K, 5))
    caps_at_worst = np.zeros((K, 5))
    violations = 0
    for t in range(trials):
        seq = sample_iid(p_star, n, Seed(seed, t))
        first = prefix_counts(seq, m)
        total = prefix_counts(seq, n)
        profile = adaptive_gammas(first, K, n, delta)
        g = profile.gammas
        S = profile.gamma_sum
        xi = 1.0 + S / n
        zeta = 3.0 * (
            1.0
            + 2.0 * (3.0 * first + 27.0 * log_term)
            / np.maximum(g, 0.5 * first - 9.0 * log_term)
        )
        target = p_plus(p_star, profile, n).probs
        # Predictors over t in [m+1, n+1]; row u holds counts after m + u items.
        second_cats = seq.items[m:] - 1
        onehot = np.zeros((n - m, K))
        onehot[np.arange(n - m), second_cats] = 1.0
        counts_path = np.vstack([first, first + np.cumsum(onehot, axis=0)])
        denominators = np.arange(m, n + 1, dtype=np.float64) + S
        predictors = (counts_path + g) / denominators[:, None]
        ratios = np.empty((K, 5))
        ratios[:, 0] = (p_star.probs / predictors).max(axis=0)
        ratios[:, 1] = (predictors / target).max(axis=0)
        ratios[:, 2] = (target / predictors).max(axis=0)
        ratios[:, 3] = p_star.probs / target
        ratios[:, 4] = (total + g) / (first + g)
        caps = np.column_stack(
            [zeta * xi, zeta, 1.0 + zeta * xi, np.full(K, xi), 6.0 + zeta]
        )
        if np.any(ratios > caps + INEQ_TOL):
            violations += 1
        quotient = ratios / caps
        better = quotient > worst_q
        worst_q = np.where(better, quotient, worst_q)
        worst_r = np.where(better, ratios, worst_r)
        caps_at_worst = np.where(better, caps, caps_at_worst)
    return RatioDiagnostics(
        worst_ratios=worst_r,
        caps_at_worst=caps_at_worst,
        worst_quotients=worst_q,
        violation_fraction=violations / trials,
        trials=trials,
        n=n,
        delta=delta,
    )


@dataclass(frozen=True)
class MeanKlCheck:
    """Reverse-KL quantile of the empirical-frequency estimator against the
    explicit-constant benchmark (7K + 6 ln(1/delta)) / n."""

    quantile: float
    bound: float
    mean: float
    passed: bool
    trials: int


def mean_kl_check(
    p_star: ProbVec, n: int, delta: float, trials: int, seed: int
) -> MeanKlCheck:
    """Measure the (1 - delta)-quantile of KL(empirical || p_star).

    The reverse direction is always finite because the empirical frequencies
    are supported inside the support of p_star.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    values = np.empty(trials)
    for t in range(trials):
        seq = sample_iid(p_star, n, Seed(seed, t))
        values[t] = kl(mle(prefix_counts(seq, n), n), p_star)
    values.sort()
    q = empirical_quantile(values, delta)
    bound = (7.0 * p_star.K + 6.0 * math.log(1.0 / delta)) / n
    return MeanKlCheck(
        quantile=q,
        bound=bound,
        mean=float(values.mean()),
        passed=q <= bound,
        trials=trials,
    )


def _resolve_pstar(label, K: int, n: int, delta: float, spec: EstimatorSpec):
    """Turn a config pstar entry into (label, ProbVec) for one cell."""
    if isinstance(label, str):
        if label == "uniform":
            return "uniform", uniform(K)
        if label == "attack":
            inst = adversarial.attack_instance(spec, K, n, delta)
            return "attack", inst.p_star
        if label.startswith("file:"):
            return label, load_distribution(label[len("file:") :])
        raise ValueError(f"unknown pstar {label!r}")
    return "custom", ProbVec(np.asarray(label, dtype=np.float64))


def _as_list(obj, key_singular, key_plural):
    if key_singular in obj and key_plural in obj:
        raise ValueError(f"give either {key_singular!r} or {key_plural!r}, not both")
    if key_singular in obj:
        return [obj[key_singular]]
    if key_plural in obj:
        value = obj[key_plural]
        if not isinstance(value, list) or not value:
            raise ValueError(f"{key_plural!r} must be a non-empty list")
        return value
    raise ValueError(f"config needs {key_singular!r} or {key_plural!r}")


def expand_config(obj: dict) -> list[TrialConfig]:
    """Expand a config mapping into the cartesian grid of trial cells.

    Recognized keys: estimator(s), K(s), n(s), delta(s), pstar(s), trials,
    seed.  Every cell is validated before any trial runs, and all cells
    share the master seed so duplicate cells produce identical rows.
    """
    known = {
        "estimator", "estimators", "K", "Ks", "n", "ns", "delta", "deltas",
        "pstar", "pstars", "trials", "seed",
    }
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "trials" not in obj or "seed" not in obj:
        raise ValueError("config needs 'trials' and 'seed'")
    trials = int(obj["trials"])
    seed = int(obj["seed"])
    estimators = [EstimatorSpec.parse(str(e)) for e in _as_list(obj, "estimator", "estimators")]
    Ks = [int(k) for k in _as_list(obj, "K", "Ks")]
    ns = [int(v) for v in _as_list(obj, "n", "ns")]
    deltas = [float(d) for d in _as_list(obj, "delta", "deltas")]
    pstars = _as_list(obj, "pstar", "pstars") if ("pstar" in obj or "pstars" in obj) else ["uniform"]
    cells = []
    for spec, K, n, delta, pstar in itertools.product(estimators, Ks, ns, deltas, pstars):
        label, p = _resolve_pstar(pstar, K, n, delta, spec)
        if p.K != K:
            raise ValueError(f"pstar {label!r} has {p.K} categories, cell expects {K}")
        cells.append(
            TrialConfig(
                estimator=spec, p_star=p, n=n, delta=delta,
                trials=trials, seed=seed, pstar_label=label,
            )
        )
    return cells


def sweep(cells: list[TrialConfig]) -> list[RiskReport]:
    """Run every cell; cells are independent and reproducible."""
    return [run_trials(cell) for cell in cells]


def write_csv(reports: list[RiskReport], out) -> None:
    """Write reports as deterministic CSV (12 significant digits, "inf")."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerow(report.csv_row())


def csv_text(reports: list[RiskReport]) -> str:
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()
