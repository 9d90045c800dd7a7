"""Command-line interface.

Subcommands: divergence, estimate, attack, simulate, sweep, diagnose-ratios,
exact, plot.  Exit codes: 0 success, 2 configuration error, 3 failed hard
gate under ``simulate --gate``.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import adversarial, harness, plots
from .distributions import load_distribution, load_sample, save_distribution
from .divergences import chain_report, chi2, format_value, hellinger_sq, kl, l1
from .estimators import EstimatorSpec, fit

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3


def _sanitize(obj):
    """Make a structure JSON-safe; +inf becomes the string "inf"."""
    if isinstance(obj, float):
        return "inf" if math.isinf(obj) else obj
    if isinstance(obj, (np.floating,)):
        return _sanitize(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def cmd_divergence(args) -> int:
    p = load_distribution(args.p)
    q = load_distribution(args.q)
    if args.measure == "chain":
        report = chain_report(p, q)
        print(" ".join(format_value(v) for v in report.values))
        return EXIT_OK
    measures = {
        "kl": lambda: kl(p, q),
        "rkl": lambda: kl(q, p),
        "chi2": lambda: chi2(p, q),
        "rchi2": lambda: chi2(q, p),
        "hellinger2": lambda: hellinger_sq(p, q),
        "l1": lambda: l1(p, q),
    }
    print(format_value(measures[args.measure]()))
    return EXIT_OK


def cmd_estimate(args) -> int:
    spec = EstimatorSpec.parse(args.estimator)
    seq = load_sample(args.data, K=args.K)
    save_distribution(args.out, fit(spec, seq))
    return EXIT_OK


def cmd_attack(args) -> int:
    spec = EstimatorSpec.parse(args.estimator)
    inst = adversarial.attack_instance(spec, args.K, args.n, args.delta)
    payload = {
        "estimator": spec.label,
        "K": args.K,
        "n": args.n,
        "delta": args.delta,
        "alpha": inst.alpha,
        "attacked_index": inst.attacked_index,
        "probe_mass": inst.probe_mass,
        "bound": inst.bound,
        "p_star": inst.p_star.probs,
    }
    if args.trials is not None:
        config = harness.TrialConfig(
            estimator=spec,
            p_star=inst.p_star,
            n=args.n,
            delta=args.delta,
            trials=args.trials,
            seed=args.seed,
            pstar_label="attack",
        )
        report = harness.run_trials(config)
        payload["trials"] = args.trials
        payload["seed"] = args.seed
        payload["exceedance_frequency"] = float(
            np.mean(report.kl_values >= inst.bound)
        )
        payload["frac_infinite"] = report.frac_infinite
        payload["quantile"] = report.quantile
    print(json.dumps(_sanitize(payload), indent=2))
    return EXIT_OK


def _load_config(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    return harness.expand_config(obj)


def _emit_csv(reports, out_path) -> None:
    if out_path is None:
        harness.write_csv(reports, sys.stdout)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            harness.write_csv(reports, fh)


def cmd_simulate(args) -> int:
    cells = _load_config(args.config)
    reports = harness.sweep(cells)
    _emit_csv(reports, args.out)
    if args.gate:
        failed = False
        for cell in cells:
            check = harness.mean_kl_check(
                cell.p_star, cell.n, cell.delta, cell.trials, cell.seed
            )
            status = "pass" if check.passed else "FAIL"
            print(
                f"gate {status}: K={cell.p_star.K} n={cell.n} "
                f"delta={cell.delta:g} reverse-KL quantile "
                f"{format_value(check.quantile)} vs bound {format_value(check.bound)}",
                file=sys.stderr,
            )
            failed = failed or not check.passed
        if failed:
            return EXIT_GATE
    return EXIT_OK


def cmd_sweep(args) -> int:
    cells = _load_config(args.config)
    reports = harness.sweep(cells)
    _emit_csv(reports, args.out)
    if args.figures is not None:
        rows = plots.read_csv_rows(args.out)
        for path in plots.render_sweep_figures(rows, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_diagnose_ratios(args) -> int:
    p_star = load_distribution(args.pstar)
    diag = harness.ratio_diagnostics(
        p_star, args.n, args.delta, args.trials, args.seed
    )
    payload = {
        "n": args.n,
        "delta": args.delta,
        "trials": args.trials,
        "seed": args.seed,
        "violation_fraction": diag.violation_fraction,
        "ratio_names": list(harness.RATIO_NAMES),
        "worst_ratios": diag.worst_ratios,
        "caps_at_worst": diag.caps_at_worst,
        "worst_quotients": diag.worst_quotients,
    }
    print(json.dumps(_sanitize(payload), indent=2))
    return EXIT_OK


def cmd_exact(args) -> int:
    spec = EstimatorSpec.parse(args.estimator)
    p_star = load_distribution(args.pstar)
    risk = harness.exact_risk_enumeration(spec, p_star, args.n, args.delta)
    payload = {
        "estimator": spec.label,
        "n": args.n,
        "delta": args.delta,
        "quantile": risk.quantile,
        "prob_infinite": risk.prob_infinite,
        "support_size": int(risk.values.size),
    }
    print(json.dumps(_sanitize(payload), indent=2))
    return EXIT_OK


def cmd_plot(args) -> int:
    for path in plots.render_from_csv(args.csv, args.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klrisk",
        description="KL risk of discrete-distribution estimators: "
        "estimators, divergences, adversarial instances, Monte Carlo harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", help="divergence between two distribution files")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument(
        "--measure",
        required=True,
        choices=["kl", "rkl", "chi2", "rchi2", "hellinger2", "l1", "chain"],
    )
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("estimate", help="fit an estimator to a sample file")
    p.add_argument("--data", required=True, help="one category index per line")
    p.add_argument("--estimator", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--K", type=int, default=None, help="alphabet size (default: max index)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("attack", help="build the estimator-targeted attack instance")
    p.add_argument("--estimator", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("simulate", help="run Monte Carlo cells from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument(
        "--gate",
        action="store_true",
        help="also enforce the explicit-constant reverse-KL benchmark; exit 3 on failure",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid and write a CSV table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--figures", default=None, help="also render figures into this directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagnose-ratios", help="predictor ratio-cap diagnostics")
    p.add_argument("--pstar", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_diagnose_ratios)

    p = sub.add_parser("exact", help="exact risk distribution by enumeration")
    p.add_argument("--estimator", required=True)
    p.add_argument("--pstar", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("plot", help="render figures from a sweep CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
