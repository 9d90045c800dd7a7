"""klrisk: high-probability KL risk of discrete-distribution estimators.

Estimators (empirical frequencies, additive smoothing, adaptive per-category
smoothing, suffix-averaged online-to-batch), extended-real divergences,
adversarial lower-bound instances, and a Monte Carlo / exact-enumeration
harness with CSV reporting and figure rendering.
"""

from .adversarial import (
    AdversarialInstance,
    HardFamily,
    attack_event_probability,
    attack_instance,
    build_attack,
    hard_family,
    probe_zero_counts,
)
from .distributions import (
    ProbVec,
    SampleSeq,
    Seed,
    load_distribution,
    prefix_counts,
    sample_iid,
    save_distribution,
    uniform,
    validate_prob_vec,
)
from .divergences import (
    ChainReport,
    chain_report,
    chi2,
    format_value,
    hellinger_sq,
    kl,
    l1,
    pinsker_gap,
    yang_barron_gap,
)
from .estimators import (
    EstimatorSpec,
    GammaProfile,
    TrueSmallSet,
    adaptive_gammas,
    add_constant,
    add_gamma_vec,
    constant_profile,
    fit,
    mle,
    otb_estimate,
    p_plus,
    true_small_set,
)
from .harness import (
    ExactRisk,
    MeanKlCheck,
    RatioDiagnostics,
    RiskReport,
    TrialConfig,
    empirical_quantile,
    exact_risk_enumeration,
    expand_config,
    mean_kl_check,
    ratio_diagnostics,
    run_trials,
    sweep,
    write_csv,
)

__version__ = "0.1.0"
