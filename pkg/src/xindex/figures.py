"""Figure rendering for harness reports.

The report path of the CLI drops PNG figures next to the NDJSON output
unless figures are switched off.  Everything here takes plain report
dictionaries (the JSON form), so the figures can also be rebuilt from a
report file after the fact.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def residual_scatter(reports: list[dict], path, title: str) -> str:
    """Residual per trial on a log axis, with the tolerance line."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    xs, ys, colors = [], [], []
    floor = 1e-18
    for i, rep in enumerate(reports):
        res = rep.get("residual")
        if res is None or not math.isfinite(res):
            res = 1.0
        xs.append(i)
        ys.append(max(float(res), floor))
        colors.append("tab:blue" if rep.get("passed") else "tab:red")
    ax.scatter(xs, ys, s=14, c=colors)
    tols = [r.get("tolerance") for r in reports if r.get("tolerance")]
    if tols:
        ax.axhline(min(tols), color="tab:orange", lw=1.0, ls="--", label="tolerance")
        ax.legend(loc="upper right")
    ax.set_yscale("log")
    ax.set_xlabel("trial")
    ax.set_ylabel("residual")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def eps_history_plot(reports: list[dict], path, title: str) -> str:
    """Epsilon histories of limit reports against the epsilon grid."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    drew = False
    for rep in reports:
        details = rep.get("details") or {}
        eps = details.get("eps")
        if not eps:
            continue
        for key in ("history_lhs", "history_rhs", "history"):
            hist = details.get(key)
            if hist and len(hist) == len(eps):
                ax.plot(eps, hist, marker=".", lw=0.8, alpha=0.7)
                drew = True
    if not drew:
        ax.text(0.5, 0.5, "no epsilon histories in reports", ha="center", va="center")
    ax.set_xscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("trace history")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def ssf_staircase(lams: list[float], values: list[float], path, title: str) -> str:
    """Spectral shift curve as a staircase."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.step(lams, values, where="post")
    ax.set_xlabel("lambda")
    ax.set_ylabel("xi(H - lambda, H0 - lambda)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
