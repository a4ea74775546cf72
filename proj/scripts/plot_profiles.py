"""Plot phi, phi' on the three edges from `sgj profile` output.

usage: plot_profiles.py OUT_DIR [-o profiles.png]
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sgjcsv import floats, read


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("profiles.png"))
    args = ap.parse_args()

    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    prov = ""
    for j in (1, 2, 3):
        prov, c = read(args.run_dir / f"profile_edge{j}.csv")
        x = floats(c["x"])
        top.plot(x, floats(c["phi"]), label=f"edge {j}")
        bottom.plot(x, floats(c["dphi"]), label=f"edge {j}")
    top.set_ylabel("phi")
    bottom.set_ylabel("dphi/dx")
    bottom.set_xlabel("x")
    top.legend()
    fig.suptitle(prov, fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
