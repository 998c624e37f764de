#!/usr/bin/env python3
"""Render fc_<governor>_<profile>.csv files from `rgctl simulate` on the fuel-cell plant.

Top: oxygen excess ratio with the 1.9 floor.  Bottom: compressor operating
points in the (W_cp, p_sm / p_atm) plane with dashed surge and choke lines.

    tools/plot_fc.py out/fc_none_steps.csv out/fc_mnnrg_steps.csv -o fc.png
"""

import argparse
import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

DEFAULT_PARAMS = Path(__file__).resolve().parent.parent / "data" / "fc_params.json"


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("runs", nargs="+", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("fc.png"))
    ap.add_argument("--params", type=Path, default=DEFAULT_PARAMS)
    args = ap.parse_args()

    p_atm = json.loads(args.params.read_text())["primitives"]["p_atm"]
    fig, (ax_l, ax_m) = plt.subplots(2, 1, figsize=(8, 8))
    w_lo, w_hi = float("inf"), 0.0
    for path in args.runs:
        d = read(path)
        label = path.stem.removeprefix("fc_")
        ax_l.plot(d["t"], d["lambda_o2"], lw=1, label=label)
        pr = [p / p_atm for p in d["p_sm"]]
        ax_m.plot(d["W_cp"], pr, lw=1, label=label)
        w_lo, w_hi = min(w_lo, min(d["W_cp"])), max(w_hi, max(d["W_cp"]))

    ax_l.axhline(1.9, color="k", ls="--", lw=1)
    ax_l.set_xlabel("t [s]")
    ax_l.set_ylabel("oxygen excess ratio")
    ax_l.legend()

    w = [w_lo * 0.9 + (w_hi * 1.1 - w_lo * 0.9) * k / 50 for k in range(51)]
    ax_m.plot(w, [50.0 * x - 0.1 for x in w], "k--", lw=1, label="surge")
    ax_m.plot(w, [15.27 * x + 0.6 for x in w], "k:", lw=1, label="choke")
    ax_m.set_xlabel("W_cp [kg/s]")
    ax_m.set_ylabel("p_sm / p_atm")
    ax_m.legend()

    fig.tight_layout()
    fig.savefig(args.output, dpi=120)


if __name__ == "__main__":
    main()
