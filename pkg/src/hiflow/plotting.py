"""Report figures written next to the CSV output."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import radial_spectrum  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "hiflow",
}
_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)


def acceleration_norms(traj) -> tuple[np.ndarray, np.ndarray]:
    """RMS of ``(v_next - v_prev) / (t_next - t_prev)`` per consecutive record pair."""
    ts, norms = [], []
    for prev, cur in zip(traj.records, traj.records[1:]):
        accel = (cur.v - prev.v) / (cur.t - prev.t)
        ts.append(cur.t)
        norms.append(float(np.sqrt(np.mean(accel**2))))
    return np.array(ts), np.array(norms)


def plot_radial_spectra(results, path, bins: int = 16) -> None:
    """Terminal spectra of each guided stage against its upsampled low resolution input."""
    guided = [r for r in results if r.reference is not None]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, max(len(guided), 1), figsize=(3.2 * max(len(guided), 1), 2.6), squeeze=False)
        edges = (np.arange(bins) + 0.5) / bins
        for ax, res in zip(axes[0], guided):
            ax.semilogy(edges, radial_spectrum(res.terminal, bins) + 1e-30, label="output")
            ax.semilogy(edges, radial_spectrum(res.reference.anchor, bins) + 1e-30, "--", label="upsampled input")
            ax.set_title(f"stage {res.index} ({res.dims[1]}x{res.dims[2]})")
            ax.set_xlabel("normalised frequency")
        axes[0][0].set_ylabel("mean power")
        axes[0][0].legend(frameon=False)
        _save(fig, path)


def plot_acceleration(trajectories: dict, path) -> None:
    """Acceleration magnitude against t for each labelled trajectory."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.0, 2.8))
        for label, traj in trajectories.items():
            ts, norms = acceleration_norms(traj)
            if len(ts):
                ax.semilogy(ts, norms + 1e-30, marker=".", label=label)
        ax.invert_xaxis()
        ax.set_xlabel("t")
        ax.set_ylabel("RMS acceleration")
        ax.legend(frameon=False)
        _save(fig, path)


def plot_ablation(rows, path, metric_names=("lowband_mse", "detail_distance")) -> None:
    """Mean and spread over seeds of each metric per ablation configuration."""
    groups = defaultdict(list)
    order = []
    for r in rows:
        key = (r["stage"], r["config"])
        if key not in groups:
            order.append(key)
        groups[key].append(r)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(metric_names), figsize=(3.6 * len(metric_names), 3.0), squeeze=False)
        labels = [f"s{s}:{c}" for s, c in order]
        for ax, name in zip(axes[0], metric_names):
            vals = [np.array([float(r[name]) for r in groups[k]]) for k in order]
            ax.bar(range(len(order)), [v.mean() for v in vals], yerr=[v.std() for v in vals], capsize=2)
            ax.set_xticks(range(len(order)))
            ax.set_xticklabels(labels, rotation=45, ha="right")
            ax.set_title(name)
        _save(fig, path)
