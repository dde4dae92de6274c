"""Command line for rendering run-directory figures.

    curveflow-viz snapshots <run_dir> [-o out.png]
    curveflow-viz cellnumber <run_dir> [-o out.png] [--overlay none|constant|exp_decay] [-A RATE]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from curveflow_viz.plots import plot_cell_number, plot_snapshots


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="curveflow-viz")
    sub = parser.add_subparsers(dest="command", required=True)

    p_snap = sub.add_parser("snapshots", help="overlaid interface snapshots")
    p_snap.add_argument("run_dir")
    p_snap.add_argument("-o", "--out", default=None)

    p_cell = sub.add_parser("cellnumber", help="normalised cell number history")
    p_cell.add_argument("run_dir")
    p_cell.add_argument("-o", "--out", default=None)
    p_cell.add_argument(
        "--overlay", choices=("none", "constant", "exp_decay"), default="none"
    )
    p_cell.add_argument("-A", type=float, default=0.0, help="decay rate for exp_decay")

    args = parser.parse_args(argv)
    run_dir = Path(args.run_dir)
    try:
        if args.command == "snapshots":
            out = Path(args.out or run_dir / "snapshots.png")
            path = plot_snapshots(run_dir, out)
            print(f"wrote {path}")
        else:
            out = Path(args.out or run_dir / "cell_number.png")
            path, drift = plot_cell_number(
                run_dir, out, overlay=args.overlay, A=args.A
            )
            msg = f"wrote {path}"
            if drift == drift:  # not NaN
                msg += f" (max drift {drift:.4f})"
            print(msg)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
