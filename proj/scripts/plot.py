#!/usr/bin/env python3
"""Plot the CSVs written by `vri compare`. Usage: plot.py RESULTS_DIR [OUT_DIR]"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    cols = {h: [] for h in rows[0]}
    for row in rows[1:]:
        for h, v in zip(rows[0], row):
            cols[h].append(float(v) if v else float("nan"))
    return cols


def main():
    src = Path(sys.argv[1] if len(sys.argv) > 1 else "results")
    dst = Path(sys.argv[2]) if len(sys.argv) > 2 else src
    dst.mkdir(parents=True, exist_ok=True)

    figs = [
        ("fig1_paths.csv", "mortality intensity and asset"),
        ("fig2_strategies.csv", "equilibrium strategies"),
        ("fig3_wealth.csv", "wealth"),
        ("fig4_reinsurance_pct.csv", "% difference in a(t)"),
        ("fig5_wealth_pct.csv", "% difference in X(t)"),
    ]
    for name, title in figs:
        d = read(src / name)
        t = d.pop("t")
        fig, ax = plt.subplots(figsize=(7, 4))
        for h, v in d.items():
            ax.plot(t, v, label=h, lw=1)
        ax.set_xlabel("t (years)")
        ax.set_title(title)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(dst / name.replace(".csv", ".png"), dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    main()
