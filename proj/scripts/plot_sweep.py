"""Plot mu1, mu2 and the predicted growth rate against Z from `sgj sweep-z`.

usage: plot_sweep.py OUT_DIR [-o sweep.png]
"""

import argparse
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sgjcsv import floats, read


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("sweep.png"))
    args = ap.parse_args()

    prov, c = read(args.run_dir / "sweep.csv")
    z = floats(c["Z"])
    fig, (spec, rate) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    spec.plot(z, floats(c["mu1"]), "o-", label="mu1")
    spec.plot(z, floats(c["mu2"]), "s-", label="mu2")
    oracle = floats(c["oracle_mu1"])
    if not all(math.isnan(v) for v in oracle):
        spec.plot(z, oracle, "k+", label="mu1 (shooting)")
    spec.axhline(0.0, color="gray", lw=0.5)
    spec.set_ylabel("eigenvalue")
    spec.legend()
    rate.plot(z, floats(c["predicted_growth_rate"]), "o-")
    rate.set_ylabel("sqrt(-mu1)")
    rate.set_xlabel("Z")
    fig.suptitle(prov, fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
