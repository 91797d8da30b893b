"""From a simulated capture session to fixed-size motion samples and a replay program.

A brush holder with three markers dips into five grid cells in turn. The
script derives the tip pose from the markers, cuts the stream where the
tip goes below the contact height, centres each stroke on its cell and
resamples it to 6x60, then replays one sample as a robot program.

    python demos/03_mocap_pipeline.py --out demo_out
"""

import argparse
import math
from pathlib import Path

import numpy as np

from robopaint import dataprep, program

FPS = 120.0


def simulated_markers(layout, rng):
    """(n, 2 + 9) rows of frame, time and three marker positions."""
    tri = np.array([[0.0, 0.0, 0.0], [40.0, 0.0, 0.0], [0.0, 30.0, 0.0]])
    rows, t = [], 0.0
    for cell in layout.cells[:5]:
        cx, cy = cell.center_mm
        n = int(FPS * rng.uniform(0.8, 1.4))
        s = np.linspace(0.0, 1.0, n)
        x = cx - 15 + 30 * s
        y = cy + 8 * np.sin(np.pi * s)
        z = 10.0 - 12.0 * np.sin(np.pi * s)  # dips to -2 mm in the middle
        yaw = 20.0 * s
        for xi, yi, zi, a in zip(x, y, z, yaw):
            c, si = math.cos(math.radians(a)), math.sin(math.radians(a))
            R = np.array([[c, -si, 0.0], [si, c, 0.0], [0.0, 0.0, 1.0]])
            m = (tri - tri.mean(axis=0)) @ R.T + [xi, yi, zi]
            rows.append([len(rows), t, *m.ravel()])
            t += 1.0 / FPS
    return np.array(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo_out"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(3)

    layout = dataprep.grid20_layout()
    (args.out / "grid20.json").write_text(layout.to_json())

    raw = simulated_markers(layout, rng)
    header = "frame,time," + ",".join(f"m{i}{a}" for i in (1, 2, 3) for a in "xyz")
    np.savetxt(args.out / "session.csv", raw, delimiter=",", header=header, comments="",
               fmt="%.6f")

    # the reference triangle is the marker layout at zero rotation
    tri = np.array([[0.0, 0.0, 0.0], [40.0, 0.0, 0.0], [0.0, 30.0, 0.0]])
    cal = dataprep.MarkerCalibration(offset=(0.0, 0.0, 0.0), reference=tuple(map(tuple, tri)))
    frames = dataprep.read_mocap_csv(args.out / "session.csv", cal)
    print(f"{len(frames)} frames, {frames[-1, 0]:.2f} s of capture")

    records, rejected = dataprep.ingest_stream(frames, layout, "session")
    for r in records:
        yaw = r.sample[3]
        print(f"cell {r.cell:2d}: frames {r.frame_range[0]}-{r.frame_range[1]}, "
              f"x from {r.sample[0, 0]:+.1f} to {r.sample[0, -1]:+.1f} mm, "
              f"yaw {yaw[0]:.1f} -> {yaw[-1]:.1f} deg")
    print(f"{len(rejected)} segments discarded")
    dataprep.write_motion_jsonl(args.out / "motion.jsonl", records)

    prog = program.motion_to_program(records[0].sample, program.CanvasFrame(), index=0)
    program.write_program(args.out / "replay.rprog", prog)
    print(f"replay program: {prog.count(program.Move)} moves -> {args.out / 'replay.rprog'}")


if __name__ == "__main__":
    main()
