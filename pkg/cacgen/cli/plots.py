"""
Ablation plot (SVG).
"""

import logging
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .batch import AblationRow  # noqa: E402

logger = logging.getLogger(__name__)

_ARM_STYLE = {"cac": ("with CAC", "tab:blue"), "concat": ("without CAC", "tab:orange")}


def plot_ablation(rows: Sequence[AblationRow], path: Union[str, Path]) -> Path:
    """mAP50 (solid) and KID (dashed) against the MD ratio, one color per arm."""
    path = Path(path)
    plt.rcParams["svg.hashsalt"] = "cacgen"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    kid_ax = ax.twinx()
    for arm, (label, color) in _ARM_STYLE.items():
        arm_rows = sorted((r for r in rows if r.arm == arm), key=lambda r: r.ratio)
        if not arm_rows:
            continue
        ratios = [r.ratio for r in arm_rows]
        ax.plot(ratios, [r.map50 for r in arm_rows], marker="o", color=color, label=f"{label} mAP50")
        kid_points = [(r.ratio, r.kid) for r in arm_rows if r.kid is not None]
        if kid_points:
            xs, ys = zip(*kid_points)
            kid_ax.plot(xs, ys, linestyle="--", marker="x", color=color, label=f"{label} KID")
    ax.set_xlabel("MD ratio")
    ax.set_ylabel("mAP50")
    kid_ax.set_ylabel("KID")
    handles, labels = ax.get_legend_handles_labels()
    kid_handles, kid_labels = kid_ax.get_legend_handles_labels()
    ax.legend(handles + kid_handles, labels + kid_labels, fontsize="small", loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote ablation plot to {path}")
    return path
