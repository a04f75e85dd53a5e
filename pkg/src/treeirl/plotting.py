"""SVG learning-curve charts: one panel per setting, one line per method."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from treeirl.sweep import SweepResult  # noqa: E402

COLORS = {"baseline": "tab:gray", "erb": "tab:blue", "erb_eqb": "tab:red", "bc": "tab:green"}


def _panel_key(meta: dict) -> tuple:
    return (meta["branching"], meta["levels"], bool(meta.get("shaky", False)), meta["eta_pi"])


def _panel_title(key: tuple) -> str:
    b, levels, shaky, eta = key
    kind = ", shaky" if shaky else ""
    return f"b={b}, levels={levels}{kind}, eta_pi={eta:g}"


def emit_svg(result: SweepResult, path, which: str = "det"):
    if not result.curves:
        raise ValueError("nothing to plot: empty sweep result")
    agg = result.aggregate()
    panels: dict = {}
    for cid, stats in agg.items():
        panels.setdefault(_panel_key(stats["meta"]), []).append((cid, stats))
    # several expert ratios in one panel get their own labels
    ratio_varies = {
        key: len({s["meta"]["expert_ratio"] for _, s in items if s["meta"]["method"] != "baseline"}) > 1
        for key, items in panels.items()
    }
    keys = sorted(panels)
    ncols = min(3, len(keys))
    nrows = -(-len(keys) // ncols)
    plt.rcParams["svg.hashsalt"] = "treeirl"
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.5 * ncols, 3.4 * nrows), squeeze=False)
    for ax, key in zip(axes.flat, keys):
        for cid, stats in panels[key]:
            meta = stats["meta"]
            mean, std = stats[f"{which}_mean"], stats[f"{which}_std"]
            x = np.arange(len(mean))
            label = meta["method"]
            if ratio_varies[key]:
                label += f" ({meta['expert_ratio']:g})"
            color = None if ratio_varies[key] else COLORS.get(meta["method"])
            line, = ax.plot(x, mean, label=label, color=color, linewidth=1.2)
            ax.fill_between(x, mean - std, mean + std, color=line.get_color(), alpha=0.2,
                            linewidth=0)
        ax.set_title(_panel_title(key), fontsize=9)
        ax.set_xlabel("iterations")
        ax.set_ylabel("return")
        ax.legend(fontsize=7)
    for ax in list(axes.flat)[len(keys):]:
        ax.set_visible(False)
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
