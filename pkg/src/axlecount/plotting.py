"""Figures: projected tire tracks of one vehicle and the per-tier accuracy table."""

from __future__ import annotations

import contextlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .pipeline import VehicleResult  # noqa: E402

# fixed ids and no timestamp so repeated renders are byte-identical
_RC = {
    "svg.hashsalt": "axlecount",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 8,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (6.0, 4.0),
}
_METADATA = {"Date": None, "Creator": "axlecount"}


@contextlib.contextmanager
def figure_style():
    with matplotlib.rc_context(_RC):
        yield


def track_colors(n: int) -> list:
    cmap = plt.get_cmap("tab10" if n <= 10 else "tab20")
    return [cmap(i % cmap.N) for i in range(n)]


def plot_projection(result: VehicleResult, path: str, title: str = None) -> dict:
    """Scatter the vehicle's tracks in (relative t, z); discarded points in black.

    Returns counts of what was drawn: ``{"accepted": n_tracks, "discarded_points": n}``.
    """
    accepted = [tr for tr in result.tracks if tr.accepted]
    discarded = [p for tr in result.tracks if not tr.accepted for p in tr.points]
    all_t = [p.t for tr in result.tracks for p in tr.points]
    t0 = min(all_t) if all_t else 0

    with figure_style():
        fig, ax = plt.subplots()
        for i, (tr, color) in enumerate(zip(accepted, track_colors(len(accepted)))):
            ax.scatter([p.t - t0 for p in tr.points], [p.z for p in tr.points], s=6,
                       color=color, label=f"axle {i + 1}")
        if discarded:
            ax.scatter([p.t - t0 for p in discarded], [p.z for p in discarded], s=6,
                       color="black", label="discarded")
        ax.set_xlabel("relative timestamp (frames)")
        ax.set_ylabel("projection z")
        ax.set_title(title or f"track {result.track_id} ({result.cls.value}): {len(accepted)} axles")
        if accepted or discarded:
            ax.legend(loc="best", markerscale=2, frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata=_METADATA)
        plt.close(fig)
    return {"accepted": len(accepted), "discarded_points": len(discarded)}


def plot_accuracy(metrics: dict, path: str) -> None:
    """Grouped bars of mode vs TRAX accuracy per tier."""
    tiers = list(metrics["tiers"])
    mode = [metrics["tiers"][t]["mode_accuracy"] for t in tiers]
    trax = [metrics["tiers"][t]["trax_accuracy"] for t in tiers]
    xs = range(len(tiers))
    with figure_style():
        fig, ax = plt.subplots()
        ax.bar([x - 0.2 for x in xs], mode, width=0.4, color="0.6", label="Mode")
        ax.bar([x + 0.2 for x in xs], trax, width=0.4, color="tab:blue", label="TRAX")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(tiers)
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel("axle count accuracy")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata=_METADATA)
        plt.close(fig)
