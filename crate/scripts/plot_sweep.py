#!/usr/bin/env python3
"""Plot a `wed sweep` output directory.

Usage:
    python3 scripts/plot_sweep.py out/fig1 [plot.png]

Left panel: per-eps minimizer trajectories (first dof) against the limit
reference. Right panel: dist_sup and energy_value against eps from the sweep
summary. Plotting recipe only — the solver never depends on it.
"""
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    out = pathlib.Path(sys.argv[1])
    target = sys.argv[2] if len(sys.argv) > 2 else out / "sweep.png"

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))

    header, rows = read_csv(out / "reference.csv")
    ts = [float(r[0]) for r in rows]
    us = [float(r[1]) for r in rows]
    ax1.plot(ts, us, "k-", lw=2, label="limit reference")

    _, summary = read_csv(out / "sweep_summary.csv")
    eps_list, dist, energy = [], [], []
    for row in summary:
        if not row or not row[-1].startswith("ok"):
            continue
        eps = row[0]
        eps_list.append(float(eps))
        dist.append(float(row[2]))
        energy.append(float(row[4]))
        traj = out / f"trajectory_eps_{float(eps):g}.csv"
        _, trows = read_csv(traj)
        ax1.plot(
            [float(r[0]) for r in trows],
            [float(r[1]) for r in trows],
            "--",
            label=f"eps = {float(eps):g}",
        )

    ax1.set_xlabel("t")
    ax1.set_ylabel("u")
    ax1.legend(fontsize=8)
    ax1.set_title("minimizers vs limit motion")

    ax2.loglog(eps_list, dist, "o-", label="dist_sup")
    ax2.loglog(eps_list, energy, "s-", label="energy")
    ax2.set_xlabel("eps")
    ax2.invert_xaxis()
    ax2.legend()
    ax2.set_title("sweep summary")

    fig.tight_layout()
    fig.savefig(target, dpi=150)
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
