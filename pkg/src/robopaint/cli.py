"""Command-line entry point: ``robopaint <subcommand> [options]``.

Every subcommand takes ``--config FILE.toml``; a table named after the
subcommand (dashes become underscores, e.g. ``[vae_train]``) supplies
defaults for its flags, and ``[frame]`` supplies the canvas frame for
``emit`` and ``replay``. Flags on the command line win.

Exit status: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import dataprep, program, sbr, vae
from .canvas import Canvas, read_pgm, render_sequence, write_pgm
from .errors import InvalidParameterError, RobopaintError, ShapeError
from .quantize import Palette, QuantizerConfig, quantize
from .stroke import read_strokes, write_strokes

log = logging.getLogger("robopaint")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _frame_flags(p):
    g = p.add_argument_group("canvas frame (mm)")
    for f in fields(program.CanvasFrame):
        g.add_argument("--" + f.name.replace("_", "-"), type=float, dest=f.name)
    g.add_argument("--step-mm", type=float)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with per-subcommand defaults")
    common.add_argument("-v", "--verbose", action="store_true")

    root = _Parser(prog="robopaint", description=__doc__.splitlines()[0])
    sub = root.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    p = add("paint", "convert a grayscale PGM target into strokes")
    p.add_argument("--target", type=Path)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--trace", type=Path, help="CSV of stroke_index,mse")
    p.add_argument("--preview", type=Path, help="PGM render of the final canvas")
    p.add_argument("--proposals", type=int, dest="proposals_per_step")
    p.add_argument("--refine-iters", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--min-improvement", type=float)

    p = add("quantize", "snap stroke grays and thicknesses to a k-means palette")
    p.add_argument("--in", type=Path, dest="input")
    p.add_argument("--k-gray", type=int)
    p.add_argument("--k-thick", type=int, dest="k_thickness")
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--palette", type=Path)

    p = add("emit", "turn quantized strokes into a robot program")
    p.add_argument("--in", type=Path, dest="input")
    p.add_argument("--palette", type=Path)
    p.add_argument("--out", type=Path)
    _frame_flags(p)

    p = add("replay", "turn motion samples into a robot program")
    p.add_argument("--samples", type=Path)
    p.add_argument("--index", type=int, help="replay only this record (0-based)")
    p.add_argument("--out", type=Path)
    _frame_flags(p)

    p = add("ingest-mocap", "cut a capture CSV into 6x60 motion samples")
    p.add_argument("--csv", type=Path)
    p.add_argument("--layout", type=Path)
    p.add_argument("--sheet")
    p.add_argument("--z-cut", type=float)
    p.add_argument("--min-frames", type=int)
    p.add_argument("--max-jump-mm", type=float)
    p.add_argument("--tip-offset", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("--out", type=Path)

    p = add("prep-strokes", "crop and normalise a scanned stroke sheet")
    p.add_argument("--scan", type=Path)
    p.add_argument("--layout", type=Path)
    p.add_argument("--sheet")
    p.add_argument("--index-mask", type=int, nargs=4, metavar=("X", "Y", "W", "H"))
    p.add_argument("--out-dir", type=Path)

    p = add("synth-corpus", "render a synthetic brushstroke image corpus")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--complex-fraction", type=float)
    p.add_argument("--out-dir", type=Path)

    p = add("vae-train", "train the brushstroke VAE on a directory of PGMs")
    p.add_argument("--data", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float, dest="learning_rate")
    p.add_argument("--latent-dim", type=int)
    p.add_argument("--num-blocks", type=int)
    p.add_argument("--base-channels", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--out", type=Path)
    p.add_argument("--history", type=Path, help="CSV of epoch,loss,recon,kl")

    p = add("vae-sample", "draw new brushstrokes from a trained VAE")
    p.add_argument("--model", type=Path)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path)

    p = add("vae-reconstruct", "encode and decode stroke images")
    p.add_argument("--model", type=Path)
    p.add_argument("--in", type=Path, dest="input", help="PGM file or directory of PGMs")
    p.add_argument("--out-dir", type=Path)
    return root


# --- config resolution -------------------------------------------------------------

def _check_keys(section: str, table: dict, known: set) -> None:
    unknown = sorted(set(table) - known - {"config", "verbose", "command"})
    if unknown:
        raise InvalidParameterError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def _resolve(args, section: str, defaults: dict, required: tuple[str, ...] = ()) -> dict:
    table = {}
    if args.config is not None:
        doc = tomllib.loads(args.config.read_text(encoding="utf-8"))
        table = {k.replace("-", "_"): v for k, v in doc.get(section, {}).items()}
        _check_keys(section, table, set(defaults) | set(vars(args)))
    # required keys (e.g. --seed) never fall back to a library default
    out = {k: v for k, v in defaults.items() if k not in required}
    out.update(table)
    out.update({k: v for k, v in vars(args).items()
                if v is not None and k not in ("config", "verbose", "command")})
    missing = [k for k in required if out.get(k) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s): "
                         + ", ".join("--" + m.replace("_", "-") for m in missing))
    log.info("resolved config: %s", json.dumps(out, sort_keys=True, default=str))
    return out


def _frame(args) -> tuple[program.CanvasFrame, float]:
    defaults = {f.name: f.default for f in fields(program.CanvasFrame)}
    defaults["step_mm"] = program.DEFAULT_STEP_MM
    table = {}
    if args.config is not None:
        doc = tomllib.loads(args.config.read_text(encoding="utf-8"))
        table = {k.replace("-", "_"): v for k, v in doc.get("frame", {}).items()}
        _check_keys("frame", table, set(defaults))
    merged = {**defaults, **table}
    merged.update({k: getattr(args, k) for k in defaults if getattr(args, k, None) is not None})
    step = float(merged.pop("step_mm"))
    log.info("frame: %s step_mm=%s", json.dumps(merged, sort_keys=True), step)
    return program.CanvasFrame(**merged), step


def _need_file(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def _load_images(path: Path) -> tuple[list[str], np.ndarray]:
    if path.is_dir():
        files = sorted(path.glob("*.pgm"))
    else:
        files = [_need_file(path)]
    if not files:
        raise FileNotFoundError(f"no .pgm files in {path}")
    imgs = []
    for f in files:
        px = read_pgm(f).pixels
        if px.shape != dataprep.STROKE_IMAGE_SHAPE[:2]:
            raise ShapeError(f"{f}: expected a 64x32 stroke image, got {px.shape[1]}x{px.shape[0]}")
        imgs.append(px)
    return [f.stem for f in files], np.stack(imgs)[..., None]


def _write_images(out_dir: Path, names, images) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, img in zip(names, images):
        write_pgm(out_dir / f"{name}.pgm", img[..., 0])


# --- subcommands -------------------------------------------------------------------

def cmd_paint(args) -> None:
    defaults = {f.name: f.default for f in fields(sbr.SbrConfig)}
    cfg = _resolve(args, "paint", defaults, ("target", "seed", "out"))
    target = read_pgm(_need_file(Path(cfg["target"])))
    sc = sbr.SbrConfig(**{k: cfg[k] for k in defaults})
    strokes, trace = sbr.paint_with_trace(target, sc)
    write_strokes(cfg["out"], strokes)
    if cfg.get("trace"):
        Path(cfg["trace"]).write_text(
            "stroke_index,mse\n" + "".join(f"{i},{m!r}\n" for i, m in enumerate(trace)),
            encoding="utf-8", newline="\n")
    if cfg.get("preview"):
        write_pgm(cfg["preview"], render_sequence(Canvas.blank(target.width, target.height), strokes))
    log.info("painted %d strokes, mse %.6f -> %.6f", len(strokes), trace[0], trace[-1])


def cmd_quantize(args) -> None:
    defaults = {f.name: f.default for f in fields(QuantizerConfig)}
    cfg = _resolve(args, "quantize", defaults, ("input", "seed", "out", "palette"))
    strokes = read_strokes(_need_file(Path(cfg["input"])))
    out, palette = quantize(strokes, QuantizerConfig(**{k: cfg[k] for k in defaults}))
    write_strokes(cfg["out"], out)
    palette.save(cfg["palette"])
    log.info("%d strokes -> %d grays, %d thicknesses",
             len(out), len(palette.grays), len(palette.thicknesses))


def cmd_emit(args) -> None:
    cfg = _resolve(args, "emit", {}, ("input", "palette", "out"))
    frame, step = _frame(args)
    strokes = read_strokes(_need_file(Path(cfg["input"])))
    palette = Palette.load(_need_file(Path(cfg["palette"])))
    prog = program.build_program(strokes, frame, palette, step)
    program.write_program(cfg["out"], prog)
    log.info("wrote %d actions", len(prog))


def cmd_replay(args) -> None:
    cfg = _resolve(args, "replay", {}, ("samples", "out"))
    frame, _ = _frame(args)
    records = dataprep.read_motion_jsonl(_need_file(Path(cfg["samples"])))
    if cfg.get("index") is not None:
        if not 0 <= cfg["index"] < len(records):
            raise RobopaintError(f"--index {cfg['index']} out of range ({len(records)} records)")
        chosen = [(cfg["index"], records[cfg["index"]])]
    else:
        chosen = list(enumerate(records))
    actions = []
    for i, rec in chosen:
        actions.extend(program.motion_to_program(rec.sample, frame, index=i).actions)
    program.write_program(cfg["out"], program.RobotProgram(tuple(actions)))
    log.info("replayed %d motion samples", len(chosen))


def cmd_ingest(args) -> None:
    defaults = {"z_cut": dataprep.DEFAULT_Z_CUT, "min_frames": 10, "max_jump_mm": 50.0,
                "tip_offset": [0.0, 0.0, 0.0], "sheet": None}
    cfg = _resolve(args, "ingest_mocap", defaults, ("csv", "layout", "out"))
    csv_path = _need_file(Path(cfg["csv"]))
    layout = dataprep.GridLayout.load(_need_file(Path(cfg["layout"])))
    cal = dataprep.MarkerCalibration(offset=tuple(cfg["tip_offset"]))
    frames = dataprep.read_mocap_csv(csv_path, cal)
    records, rejected = dataprep.ingest_stream(
        frames, layout, cfg["sheet"] or csv_path.stem, cfg["z_cut"],
        dataprep.QualityConfig(cfg["min_frames"], cfg["max_jump_mm"]))
    for start, why in rejected:
        log.warning("discarded segment at frame %d: %s", start, why)
    dataprep.write_motion_jsonl(cfg["out"], records)
    log.info("kept %d motion samples, discarded %d", len(records), len(rejected))


def cmd_prep_strokes(args) -> None:
    cfg = _resolve(args, "prep_strokes", {"sheet": None, "index_mask": None},
                   ("scan", "layout", "out_dir"))
    scan_path = _need_file(Path(cfg["scan"]))
    scan = read_pgm(scan_path)
    layout = dataprep.GridLayout.load(_need_file(Path(cfg["layout"])))
    sheet = cfg["sheet"] or scan_path.stem
    mask = tuple(cfg["index_mask"]) if cfg["index_mask"] else None
    cells = dataprep.crop_cells(scan, layout)
    names = [f"cell_{sheet}_{i}" for i, _ in cells]
    imgs = [dataprep.normalize_stroke_image(c, mask) for _, c in cells]
    _write_images(Path(cfg["out_dir"]), names, imgs)
    log.info("wrote %d stroke images", len(imgs))


def cmd_synth(args) -> None:
    cfg = _resolve(args, "synth_corpus", {"count": 200, "complex_fraction": 0.5},
                   ("seed", "out_dir"))
    imgs, kinds = vae.synthetic_corpus(cfg["count"], cfg["seed"], cfg["complex_fraction"])
    _write_images(Path(cfg["out_dir"]), [f"synth_{i:05d}_{k}" for i, k in enumerate(kinds)], imgs)
    log.info("wrote %d synthetic stroke images", len(imgs))


def cmd_vae_train(args) -> None:
    defaults = {f.name: f.default for f in fields(vae.VaeConfig)}
    cfg = _resolve(args, "vae_train", defaults, ("data", "seed", "out"))
    _, data = _load_images(Path(cfg["data"]))
    vc = vae.VaeConfig(**{k: cfg[k] for k in defaults})
    model, history = vae.train(
        data, vc, progress=lambda s: log.info("epoch %d loss %.3f recon %.3f kl %.3f",
                                              s.epoch, s.loss, s.recon, s.kl))
    vae.save_checkpoint(cfg["out"], model)
    if cfg.get("history"):
        vae.write_history_csv(cfg["history"], history)


def cmd_vae_sample(args) -> None:
    cfg = _resolve(args, "vae_sample", {"n": 16}, ("model", "seed", "out_dir"))
    model = vae.load_checkpoint(_need_file(Path(cfg["model"])))
    imgs = vae.sample(model, cfg["n"], cfg["seed"])
    _write_images(Path(cfg["out_dir"]), [f"sample_{i:04d}" for i in range(len(imgs))], imgs)


def cmd_vae_reconstruct(args) -> None:
    cfg = _resolve(args, "vae_reconstruct", {}, ("model", "input", "out_dir"))
    model = vae.load_checkpoint(_need_file(Path(cfg["model"])))
    names, data = _load_images(Path(cfg["input"]))
    _write_images(Path(cfg["out_dir"]), [f"recon_{n}" for n in names], vae.reconstruct(model, data))


COMMANDS = {
    "paint": cmd_paint,
    "quantize": cmd_quantize,
    "emit": cmd_emit,
    "replay": cmd_replay,
    "ingest-mocap": cmd_ingest,
    "prep-strokes": cmd_prep_strokes,
    "synth-corpus": cmd_synth,
    "vae-train": cmd_vae_train,
    "vae-sample": cmd_vae_sample,
    "vae-reconstruct": cmd_vae_reconstruct,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("robopaint: a subcommand is required\n" + parser.format_usage())
        level = logging.DEBUG if args.verbose else logging.INFO
        logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s",
                            force=True)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (RobopaintError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"robopaint: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())
