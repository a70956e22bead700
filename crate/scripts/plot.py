#!/usr/bin/env python3
"""Render monocorr plot-data files: plot.py OUT_DIR [STEM ...]"""
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render(desc_path: Path) -> Path:
    desc = json.loads(desc_path.read_text())
    xy = np.loadtxt(desc_path.parent / desc["data"], comments="#", ndmin=2)
    fig, ax = plt.subplots(figsize=(6, 4))
    if desc["style"] == "histogram":
        width = xy[1, 0] - xy[0, 0] if len(xy) > 1 else 1.0
        ax.bar(xy[:, 0], xy[:, 1], width=width, alpha=0.6, label="data")
        if desc.get("reference") == "exp":
            x = np.linspace(0, xy[-1, 0] + width / 2, 400)
            ax.plot(x, np.exp(-x), "k-", label="exp(-x)")
            ax.legend()
    else:
        ax.plot(xy[:, 0], xy[:, 1], "o-")
        if np.all(xy[:, 0] > 0) and xy[:, 0].max() / xy[:, 0].min() > 100:
            ax.set_xscale("log")
    ax.set_xlabel(desc["x_label"])
    ax.set_ylabel(desc["y_label"])
    out = desc_path.with_suffix("").with_suffix(".png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def main() -> None:
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    root = Path(sys.argv[1])
    stems = sys.argv[2:]
    descs = [root / f"{s}.plot.json" for s in stems] if stems else sorted(root.glob("*.plot.json"))
    for d in descs:
        print(render(d))


if __name__ == "__main__":
    main()
