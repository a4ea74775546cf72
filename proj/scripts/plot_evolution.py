"""Plot the deviation norm on a log scale with the fitted exponential from
`sgj evolve`, plus relative energy drift.

usage: plot_evolution.py OUT_DIR [-o evolution.png]
"""

import argparse
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sgjcsv import floats, read


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("evolution.png"))
    args = ap.parse_args()

    prov, c = read(args.run_dir / "evolution.csv")
    fit = json.loads((args.run_dir / "fit.json").read_text())
    t = floats(c["t"])
    d = floats(c["deviation_norm"])
    e = floats(c["energy"])

    fig, (dev, drift) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    dev.semilogy(t, d, label="||deviation||")
    if fit.get("valid"):
        lo, hi = fit["window"]
        i0 = min(range(len(t)), key=lambda i: abs(t[i] - lo))
        tt = [x for x in t if lo <= x <= hi]
        dev.semilogy(tt, [d[i0] * math.exp(fit["s"] * (x - t[i0])) for x in tt], "k--",
                     label=f"fit s={fit['s']:.4f} (predicted {fit['predicted_s']:.4f})")
    dev.set_ylabel("deviation norm")
    dev.legend()
    scale = abs(e[0]) if e[0] != 0 else 1.0
    drift.plot(t, [(x - e[0]) / scale for x in e])
    drift.set_ylabel("relative energy drift")
    drift.set_xlabel("t")
    fig.suptitle(prov, fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
