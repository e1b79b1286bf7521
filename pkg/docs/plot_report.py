"""Plot average PSNR over average iterations per block from a bench report.

    python docs/plot_report.py report.csv report.png

Needs matplotlib, which the package itself does not depend on.
"""

import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main(report, out):
    curves = defaultdict(list)
    with open(report, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["imageId"] == "MEAN":
                curves[row["method"]].append((int(row["avgIterations"]), float(row["psnrDb"])))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for method, pts in sorted(curves.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.set_xlabel("Average number of iterations per block")
    ax.set_ylabel("Average PSNR [dB]")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:3])
