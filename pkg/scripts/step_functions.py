"""Write CSV data for the smoothed step functions and their kernels.

One file per function with columns t,value,K, on the grid -3:3:0.01 for
K in {1, 4, 16} unless told otherwise.
"""

import argparse
from pathlib import Path

from clipvol.app import PLOT_FUNCTIONS, plot_grid, plot_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--K", default="1,4,16")
    ap.add_argument("--range", dest="grid", default="-3:3:0.01")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ks = [float(k) for k in args.K.split(",")]
    grid = plot_grid(args.grid)
    for name in sorted(PLOT_FUNCTIONS):
        rows = plot_rows(name, ks, grid)
        path = out / f"{name}.csv"
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        print(f"{path}: {len(rows) - 1} rows")


if __name__ == "__main__":
    main()
