"""Figure rendering for run records.

Each task kind gets one PNG next to the delimited output: eigenfunction
profiles for tones, truncation-sweep fans for essential-spectrum
estimates, tail plots with the certified level for certificates, and
log-volume growth lines for the growth reports.  All figures go
straight to files; nothing opens a window.
"""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .scenarios import RunRecord

__all__ = ["render_figures"]


def _plot_tone(result: dict, ax):
    t = np.asarray(result["profile_t"])
    u = np.asarray(result["profile_u"])
    ax.plot(t, u, lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("u(t)")
    ax.set_title(f"ground mode, lambda* = {result['lambda']:.6g}"
                 f"  (k={result['mode_k']}, j={result['mode_j']})")


def _plot_ess(result: dict, ax):
    for r, sweep in zip(result["r_values"], result["sweeps"]):
        arr = np.asarray(sweep)
        ax.plot(arr[:, 0], arr[:, 1], marker="o", ms=3, lw=1.0, label=f"R = {r:g}")
    if result.get("bottom") is not None:
        ax.axhline(result["bottom"], color="k", ls="--", lw=0.8,
                   label=f"bottom ~= {result['bottom']:.4g}")
    if max(map(max, ([pt[1] for pt in sw] for sw in result["sweeps"]))) > 50:
        ax.set_yscale("log")
    ax.set_xlabel("truncation radius R_cut")
    ax.set_ylabel("lambda*([R, R_cut])")
    verdict = "discrete" if result["diverged"] else "essential bottom"
    ax.set_title(f"exterior-tone sweeps ({verdict})")
    ax.legend(fontsize=8)


def _plot_certify(result: dict, ax):
    samples = result.get("witnesses", {}).get("tail_samples", [])
    if samples:
        arr = np.asarray(samples)
        ax.plot(arr[:, 0], arr[:, 1], marker=".", ms=4, lw=1.0, label="driving function")
        tail_inf = result["witnesses"].get("tail_inf")
        if tail_inf is not None:
            ax.axhline(tail_inf, color="0.5", ls=":", lw=0.8, label=f"tail inf = {tail_inf:.4g}")
    if result.get("bound") is not None:
        ax.axhline(result["bound"], color="g", ls="--", lw=0.9,
                   label=f"certified bound = {result['bound']:.4g}")
    ax.set_xlabel("t")
    ax.set_title(f"certificate [{result['kind']}]: {result['verdict']}")
    ax.legend(fontsize=8)


def _plot_compare(result: dict, ax):
    # summary bar: hypothesis margin and worst conclusion gap
    labels, values = [], []
    if result.get("hypothesis_margin") is not None:
        labels.append("hypothesis margin")
        values.append(result["hypothesis_margin"])
    if result.get("max_violation") is not None:
        labels.append("worst gap (ell - lap)")
        values.append(result["max_violation"])
    ax.bar(labels, values, color=["#4477aa", "#cc6677"][: len(labels)])
    ax.axhline(0.0, color="k", lw=0.8)
    ok = result["hypothesis_ok"] and bool(result.get("conclusion_ok"))
    ax.set_title(f"comparison check: {'holds' if ok else 'violated / hypothesis unmet'}")
    cert = result.get("certificate")
    if cert:
        ax.set_xlabel(f"certificate: {cert['verdict']}")


def _plot_verify(result: dict, ax):
    reps = result["reports"]
    names = [r["check"] for r in reps]
    residuals = [max(r["max_residual"], 1e-18) for r in reps]
    tol = reps[0]["tolerance"] if reps else 1e-7
    ax.bar(names, residuals, color="#4477aa")
    ax.axhline(tol, color="r", ls="--", lw=0.9, label=f"tolerance {tol:g}")
    ax.set_yscale("log")
    ax.set_ylabel("max residual")
    ax.set_title("identity residuals")
    ax.legend(fontsize=8)


def _plot_brooks(result: dict, ax):
    r = np.asarray(result["r_grid"])
    lv = np.asarray(result["log_volumes"])
    ax.plot(r, lv, lw=1.2, label="log vol B(r)")
    mu = result["mu_hat"]
    ax.plot(r, lv[-1] + mu * (r - r[-1]), ls="--", lw=0.9, color="0.4",
            label=f"slope mu_hat = {mu:.4g}")
    ax.set_xlabel("r")
    ax.set_ylabel("log volume")
    ax.set_title(f"volume growth: {result['verdict']}")
    ax.legend(fontsize=8)


_PLOTTERS = {
    "tone": _plot_tone,
    "ess": _plot_ess,
    "certify": _plot_certify,
    "compare": _plot_compare,
    "verify": _plot_verify,
    "brooks": _plot_brooks,
}


def render_figures(record: RunRecord, directory: str) -> list:
    """Write one PNG per successful task; returns the created paths."""
    os.makedirs(directory, exist_ok=True)
    name = record.scenario.get("name", "run")
    paths = []
    for i, entry in enumerate(record.results):
        if not entry.get("ok"):
            continue
        fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
        try:
            _PLOTTERS[entry["task"]](entry["result"], ax)
            fig.tight_layout()
            path = os.path.join(directory, f"{name}_{i + 1}_{entry['task']}.png")
            fig.savefig(path)
            paths.append(path)
        finally:
            plt.close(fig)
    return paths
