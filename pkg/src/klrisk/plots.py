"""Figure rendering for sweep results.

Consumes the sweep CSV (the simulation boundary) and writes PNG figures next
to it: measured risk quantiles against sample size with the K/n and
ln(K) ln(1/delta)/n reference rates, and the quantile-to-rate ratios the
benchmarks are judged by.
"""

import csv
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def read_csv_rows(path) -> list[dict]:
    """Load a sweep CSV, parsing numerics and mapping "inf" to math.inf."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for raw in csv.DictReader(fh):
            row = dict(raw)
            for key in ("K", "n", "trials", "seed"):
                row[key] = int(row[key])
            for key in (
                "delta",
                "quantile",
                "mean_kl",
                "frac_infinite",
                "rate_K_over_n",
                "rate_logKlog1d_over_n",
            ):
                row[key] = math.inf if row[key] == "inf" else float(row[key])
            rows.append(row)
    return rows


def _groups(rows):
    keyed = {}
    for row in rows:
        keyed.setdefault((row["estimator"], row["K"], row["delta"]), []).append(row)
    for key, group in sorted(keyed.items(), key=lambda kv: str(kv[0])):
        yield key, sorted(group, key=lambda r: r["n"])


def render_sweep_figures(rows: list[dict], out_dir) -> list[str]:
    """Render risk-vs-n and risk-to-rate figures; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for (est, K, delta), group in _groups(rows):
        ns = [r["n"] for r in group if math.isfinite(r["quantile"])]
        qs = [r["quantile"] for r in group if math.isfinite(r["quantile"])]
        if ns:
            ax.plot(ns, qs, marker="o", label=f"{est} (K={K}, d={delta:g})")
        rate_ns = [r["n"] for r in group]
        ax.plot(
            rate_ns,
            [K / n for n in rate_ns],
            linestyle="--",
            color="gray",
            alpha=0.6,
            label=f"K/n (K={K})",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("empirical (1-delta)-quantile of KL risk")
    ax.set_title("High-probability KL risk vs sample size")
    _dedup_legend(ax)
    path = os.path.join(out_dir, "risk_quantile_vs_n.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for (est, K, delta), group in _groups(rows):
        ns, ratios = [], []
        for r in group:
            rate = r["rate_K_over_n"] + r["rate_logKlog1d_over_n"]
            if math.isfinite(r["quantile"]) and rate > 0:
                ns.append(r["n"])
                ratios.append(r["quantile"] / rate)
        if ns:
            ax.plot(ns, ratios, marker="s", label=f"{est} (K={K}, d={delta:g})")
    ax.set_xscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("quantile / ((K + ln K ln(1/d)) / n)")
    ax.set_title("Risk quantile relative to the combined reference rate")
    _dedup_legend(ax)
    path = os.path.join(out_dir, "risk_to_rate_ratio.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)
    return written


def _dedup_legend(ax):
    handles, labels = ax.get_legend_handles_labels()
    seen = {}
    for h, l in zip(handles, labels):
        seen.setdefault(l, h)
    if seen:
        ax.legend(seen.values(), seen.keys(), fontsize=8)


def render_from_csv(csv_path, out_dir) -> list[str]:
    return render_sweep_figures(read_csv_rows(csv_path), out_dir)
