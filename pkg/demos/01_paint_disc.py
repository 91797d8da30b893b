"""Paint a grayscale target with the greedy stroke painter.

Builds a small synthetic target (a dark disc with a lighter band across it),
paints it stroke by stroke and saves the stroke list, the loss trace and a
preview of the result next to the target.

    python demos/01_paint_disc.py --out demo_out --budget 120
"""

import argparse
import time
from pathlib import Path

import numpy as np

from robopaint import Canvas, SbrConfig, paint_with_trace, render_sequence, write_pgm
from robopaint.stroke import write_strokes


def make_target(n: int) -> Canvas:
    yy, xx = np.mgrid[:n, :n] + 0.5
    px = np.ones((n, n))
    px[(xx - n / 2) ** 2 + (yy - n / 2) ** 2 <= (0.3 * n) ** 2] = 0.0
    px[np.abs(yy - 0.6 * n) < 0.06 * n] = 0.6
    return Canvas(px)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo_out"))
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--budget", type=int, default=120)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    target = make_target(args.size)
    t0 = time.perf_counter()
    strokes, trace = paint_with_trace(target, SbrConfig(budget=args.budget, seed=args.seed))
    print(f"{len(strokes)} strokes in {time.perf_counter() - t0:.1f} s")
    print(f"mse: blank {trace[0]:.4f} -> final {trace[-1]:.4f} "
          f"({100 * trace[-1] / trace[0]:.1f}% of blank)")

    # the first few strokes do most of the work
    for i in (1, 5, 10, 25):
        if i < len(trace):
            print(f"  after {i:3d} strokes: {trace[i]:.4f}")

    canvas = render_sequence(Canvas.blank(args.size, args.size), strokes)
    write_pgm(args.out / "target.pgm", target)
    write_pgm(args.out / "painted.pgm", canvas)
    write_strokes(args.out / "painted.strokes.jsonl", strokes)
    print(f"wrote target.pgm, painted.pgm, painted.strokes.jsonl to {args.out}")


if __name__ == "__main__":
    main()
