"""Reduce a painted stroke list to a small palette and turn it into a robot program.

Reads the strokes from ``01_paint_disc.py`` (or paints a quick set if they
are missing), clusters grays and brush widths, and writes a ``.rprog``
program for a 300 mm canvas.

    python demos/02_quantize_and_program.py --out demo_out
"""

import argparse
from collections import Counter
from pathlib import Path

from robopaint import Canvas, QuantizerConfig, SbrConfig, mse, paint, quantize, render_sequence
from robopaint import program, read_pgm
from robopaint.stroke import read_strokes, write_strokes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo_out"))
    ap.add_argument("--k-gray", type=int, default=5)
    ap.add_argument("--k-thick", type=int, default=4)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    src = args.out / "painted.strokes.jsonl"
    if src.exists():
        strokes = read_strokes(src)
        target = read_pgm(args.out / "target.pgm") if (args.out / "target.pgm").exists() else None
    else:
        import importlib.util
        found = importlib.util.spec_from_file_location(
            "paint_demo", Path(__file__).with_name("01_paint_disc.py"))
        mod = importlib.util.module_from_spec(found)
        found.loader.exec_module(mod)
        target = mod.make_target(48)
        strokes = paint(target, SbrConfig(budget=40, seed=7))
    print(f"{len(strokes)} strokes, {len({s.g for s in strokes})} distinct grays")

    cfg = QuantizerConfig(k_gray=args.k_gray, k_thickness=args.k_thick, seed=0)
    quantized, palette = quantize(strokes, cfg)
    print("palette grays:", ", ".join(f"{g:.3f}" for g in palette.grays))
    print("palette widths (r0, r1):",
          ", ".join(f"({a:.3f}, {b:.3f})" for a, b in palette.thicknesses))
    if target is not None:
        blank = Canvas.blank(target.width, target.height)
        print(f"mse before/after quantizing: {mse(render_sequence(blank, strokes), target):.4f} / "
              f"{mse(render_sequence(blank, quantized), target):.4f}")

    frame = program.CanvasFrame(width_mm=300.0, height_mm=300.0, z_contact=0.0, z_travel=20.0)
    prog = program.build_program(quantized, frame, palette, step_mm=2.0)
    program.check_program(prog, frame)
    counts = Counter(type(a).__name__ for a in prog)
    print("actions:", dict(counts))

    write_strokes(args.out / "quantized.strokes.jsonl", quantized)
    palette.save(args.out / "palette.json")
    program.write_program(args.out / "painting.rprog", prog)
    print("first lines of painting.rprog:")
    print("".join(program.emit(prog).splitlines(keepends=True)[:6]), end="")


if __name__ == "__main__":
    main()
