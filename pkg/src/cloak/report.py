"""Rendering of simulation results to files.

A run directory holds ``report.json`` (the full structured report),
``trace.jsonl`` (one canonical JSON line per applied transaction), and a
``figures`` folder with rendered charts.  Matplotlib is imported lazily
with the file backend, so importing this module stays cheap and headless
environments work.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

from .encoding import canonical_json


def write_run(report: dict, out_dir: str | Path) -> dict[str, str]:
    """Write the report, the transaction trace, and the figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, str] = {}

    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    paths["report"] = str(report_path)

    trace_path = out / "trace.jsonl"
    with trace_path.open("w") as handle:
        for record in report.get("trace", []):
            handle.write(canonical_json(record).decode() + "\n")
    paths["trace"] = str(trace_path)

    figures_dir = out / "figures"
    figures_dir.mkdir(exist_ok=True)
    paths.update(render_figures(report, figures_dir))
    return paths


def _actor_labels(report: dict) -> dict[str, str]:
    labels = {addr: name for name, addr in (report.get("actors") or {}).items()}
    enclave = (report.get("enclave") or {}).get("addr")
    if enclave:
        labels.setdefault(enclave, "enclave")
    return labels


def render_figures(report: dict, figures_dir: str | Path) -> dict[str, str]:
    """Render balance and transaction-kind charts; returns written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    figures_dir = Path(figures_dir)
    figures_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, str] = {}
    labels = _actor_labels(report)

    history = report.get("coin_history") or []
    heights = [h for h, _ in history]
    addrs = sorted({addr for _, coins in history for addr in coins})
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for addr in addrs:
        series = [coins.get(addr, 0) for _, coins in history]
        ax.plot(heights, series, label=labels.get(addr, addr[:8]), linewidth=1.5)
    ax.set_xlabel("block height")
    ax.set_ylabel("coins")
    ax.set_title("escrow and refunds over the run")
    if addrs:
        ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    balances_path = figures_dir / "coin_balances.png"
    fig.savefig(balances_path, dpi=110)
    plt.close(fig)
    paths["coin_balances"] = str(balances_path)

    ok = Counter()
    reverted = Counter()
    for record in report.get("trace", []):
        if record["status"] == "ok":
            ok[record["kind"]] += 1
        else:
            reverted[record["kind"]] += 1
    kinds = sorted(set(ok) | set(reverted))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    xs = range(len(kinds))
    ax.bar(xs, [ok[k] for k in kinds], label="applied", color="#2a7")
    ax.bar(
        xs,
        [reverted[k] for k in kinds],
        bottom=[ok[k] for k in kinds],
        label="reverted",
        color="#d55",
    )
    ax.set_xticks(list(xs))
    ax.set_xticklabels(kinds, rotation=30, ha="right")
    ax.set_ylabel("transactions")
    ax.set_title("transactions by kind")
    ax.legend()
    fig.tight_layout()
    kinds_path = figures_dir / "tx_kinds.png"
    fig.savefig(kinds_path, dpi=110)
    plt.close(fig)
    paths["tx_kinds"] = str(kinds_path)
    return paths
