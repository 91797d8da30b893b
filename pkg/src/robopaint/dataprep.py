"""Training-data preparation from artist demonstrations.

Two corpora come out of a recording session: scanned sheets of single
brushstrokes laid out in a grid, cropped and normalised to 32x64 images,
and motion-capture streams of the brush, cut into per-stroke 6x60 motion
samples.

Motion streams are ``(n, 7)`` float arrays with columns
``time, x, y, z, yaw, pitch, roll`` (seconds, millimetres, degrees).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .canvas import Canvas
from .errors import (DegenerateRigidBodyError, FormatError, InvalidSegmentError,
                     LayoutError)

STROKE_IMAGE_SHAPE = (32, 64, 1)
SAMPLE_LENGTH = 60
MOTION_ROWS = ("x", "y", "z", "yaw", "pitch", "roll")
FRAME_COLUMNS = ("time",) + MOTION_ROWS
CAPTURE_FPS = 120.0
DEFAULT_Z_CUT = 2.0
CELL_COUNTS = {"GRID20": 20, "GRID14": 14}
INCH_MM = 25.4

_POSE_HEADER = ["frame", "time", "x", "y", "z", "yaw", "pitch", "roll"]
_MARKER_HEADER = ["frame", "time"] + [f"m{i}{a}" for i in (1, 2, 3) for a in "xyz"]


class MocapFrame(NamedTuple):
    time_s: float
    x: float
    y: float
    z: float
    yaw: float
    pitch: float
    roll: float


# --- grid layouts and stroke images -------------------------------------------------

@dataclass(frozen=True)
class Cell:
    index: int
    px: tuple[int, int, int, int]          # x, y, w, h in scan pixels
    center_mm: tuple[float, float]         # on the drawing sheet, y up


@dataclass(frozen=True)
class GridLayout:
    kind: str
    cells: tuple[Cell, ...]

    def __post_init__(self):
        expected = CELL_COUNTS.get(self.kind)
        if expected is None:
            raise LayoutError(f"unknown layout kind {self.kind!r}")
        if len(self.cells) != expected:
            raise LayoutError(f"{self.kind} needs {expected} cells, got {len(self.cells)}")
        if len({c.index for c in self.cells}) != len(self.cells):
            raise LayoutError("duplicate cell index")
        for c in self.cells:
            if c.px[2] <= 0 or c.px[3] <= 0:
                raise LayoutError(f"cell {c.index} has an empty rectangle")
        for i, a in enumerate(self.cells):
            for b in self.cells[i + 1:]:
                if _overlap(a.px, b.px):
                    raise LayoutError(f"cells {a.index} and {b.index} overlap")

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "cells": [{"index": c.index, "px": list(c.px), "center_mm": list(c.center_mm)}
                      for c in self.cells],
        })

    @classmethod
    def from_json(cls, text: str) -> "GridLayout":
        try:
            obj = json.loads(text)
            cells = tuple(
                Cell(int(c["index"]), tuple(int(v) for v in c["px"]),
                     tuple(float(v) for v in c["center_mm"]))
                for c in obj["cells"]
            )
            return cls(str(obj["kind"]), cells)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, LayoutError):
                raise
            raise FormatError(f"not a grid layout document ({exc})") from exc

    @classmethod
    def load(cls, path: str | Path) -> "GridLayout":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def nearest_cell(self, x_mm: float, y_mm: float) -> Cell:
        d = [math.hypot(c.center_mm[0] - x_mm, c.center_mm[1] - y_mm) for c in self.cells]
        return self.cells[int(np.argmin(d))]


def _overlap(a, b) -> bool:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


def grid20_layout(dpi: float = 100.0, origin_px: tuple[int, int] = (0, 0),
                  origin_mm: tuple[float, float] = (0.0, 0.0)) -> GridLayout:
    """Four rows of five 2in x 2in cells, indexed row-major from the top left.

    Cell centres are in millimetres on the drawing sheet, y axis pointing up,
    from ``origin_mm`` at the bottom-left corner of the grid.
    """
    side_px = int(round(2 * dpi))
    side_mm = 2 * INCH_MM
    rows, cols = 4, 5
    cells = []
    for r in range(rows):
        for c in range(cols):
            cells.append(Cell(
                r * cols + c,
                (origin_px[0] + c * side_px, origin_px[1] + r * side_px, side_px, side_px),
                (origin_mm[0] + (c + 0.5) * side_mm, origin_mm[1] + (rows - r - 0.5) * side_mm),
            ))
    return GridLayout("GRID20", tuple(cells))


def crop_cells(scan: Canvas, layout: GridLayout) -> list[tuple[int, Canvas]]:
    out = []
    for c in sorted(layout.cells, key=lambda c: c.index):
        x, y, w, h = c.px
        if x < 0 or y < 0 or x + w > scan.width or y + h > scan.height:
            raise LayoutError(f"cell {c.index} rectangle {c.px} falls outside the "
                              f"{scan.width}x{scan.height} scan")
        out.append((c.index, Canvas(scan.pixels[y:y + h, x:x + w])))
    return out


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling with pixel-centre alignment (no antialiasing)."""
    img = np.asarray(img, dtype=np.float64)
    in_h, in_w = img.shape

    def axis(n_out, n_in):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, wy = axis(out_h, in_h)
    x0, x1, wx = axis(out_w, in_w)
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy)[:, None] + bot * wy[:, None]


def normalize_stroke_image(cell: Canvas, index_mask_region: tuple[int, int, int, int] | None = None
                           ) -> np.ndarray:
    """White-balance, blank the printed cell index, resize to 32x64x1.

    White balance scales the 99th-percentile intensity to 1.0 so stray
    specular highlights do not set the white point.
    """
    px = np.array(cell.pixels, dtype=np.float64)
    white = float(np.percentile(px, 99))
    if white > 0.0:
        px = np.clip(px / white, 0.0, 1.0)
    if index_mask_region is not None:
        x, y, w, h = index_mask_region
        px[max(y, 0):max(y + h, 0), max(x, 0):max(x + w, 0)] = 1.0
    h, w, _ = STROKE_IMAGE_SHAPE
    return np.clip(resize_bilinear(px, h, w), 0.0, 1.0)[:, :, None]


# --- marker rigid body ------------------------------------------------------------

@dataclass(frozen=True)
class MarkerCalibration:
    """Brush-tip offset in the marker body frame plus the reference triangle.

    The body frame is the frame the reference triangle spans when the brush
    holder is at zero rotation.
    """

    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    reference: tuple[tuple[float, float, float], ...] = (
        (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.offset):
            raise DegenerateRigidBodyError("tip offset must be finite")
        _triangle_frame(np.asarray(self.reference, dtype=float))


def _triangle_frame(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) from a marker triangle by Gram-Schmidt."""
    if m.shape != (3, 3):
        raise DegenerateRigidBodyError(f"expected three 3-D markers, got shape {m.shape}")
    e1 = m[1] - m[0]
    e2 = m[2] - m[0]
    scale = max(np.linalg.norm(e1), np.linalg.norm(e2))
    if scale == 0.0 or np.linalg.norm(np.cross(e1, e2)) <= 1e-9 * scale * scale:
        raise DegenerateRigidBodyError("markers are collinear")
    e1 = e1 / np.linalg.norm(e1)
    e2 = e2 - e1 * (e1 @ e2)
    e2 = e2 / np.linalg.norm(e2)
    return np.column_stack([e1, e2, np.cross(e1, e2)])


def rotation_to_euler_zyx(R: np.ndarray) -> tuple[float, float, float]:
    """(yaw, pitch, roll) in degrees with R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    yaw = math.atan2(R[1, 0], R[0, 0])
    pitch = math.asin(min(max(-R[2, 0], -1.0), 1.0))
    roll = math.atan2(R[2, 1], R[2, 2])
    return math.degrees(yaw), math.degrees(pitch), math.degrees(roll)


def derive_tip_pose(markers, cal: MarkerCalibration = MarkerCalibration(),
                    time_s: float = 0.0) -> MocapFrame:
    """Brush-tip position and ZYX Euler angles from three marker positions."""
    m = np.asarray(markers, dtype=float)
    R = _triangle_frame(m) @ _triangle_frame(np.asarray(cal.reference, dtype=float)).T
    tip = m.mean(axis=0) + R @ np.asarray(cal.offset, dtype=float)
    yaw, pitch, roll = rotation_to_euler_zyx(R)
    return MocapFrame(time_s, float(tip[0]), float(tip[1]), float(tip[2]), yaw, pitch, roll)


# --- motion streams -------------------------------------------------------------

@dataclass
class Segment:
    """Contiguous run of frames; ``start`` indexes the source stream."""

    frames: np.ndarray
    start: int = 0

    @property
    def stop(self) -> int:
        return self.start + len(self.frames)

    def __len__(self):
        return len(self.frames)


def _as_frames(frames) -> np.ndarray:
    arr = np.asarray(frames, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, len(FRAME_COLUMNS))
    if arr.ndim != 2 or arr.shape[1] != len(FRAME_COLUMNS):
        raise FormatError(f"frames must be (n, {len(FRAME_COLUMNS)}), got {arr.shape}")
    return arr


def segment_by_z(frames, z_cut: float = DEFAULT_Z_CUT) -> list[Segment]:
    """Maximal runs of consecutive frames with ``z < z_cut``, in time order."""
    arr = _as_frames(frames)
    below = arr[:, 3] < z_cut
    edges = np.diff(np.concatenate([[0], below.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return [Segment(arr[a:b].copy(), int(a)) for a, b in zip(starts, stops)]


def center_segment(seg: Segment, cell_center: tuple[float, float]) -> Segment:
    if len(seg) == 0:
        raise InvalidSegmentError("cannot centre an empty segment")
    frames = seg.frames.copy()
    frames[:, 1] -= cell_center[0]
    frames[:, 2] -= cell_center[1]
    return Segment(frames, seg.start)


def resample_indices(n: int, length: int = SAMPLE_LENGTH) -> np.ndarray:
    """Frame indices picked by :func:`resample_fixed` for an ``n``-frame segment."""
    if n <= 0:
        raise InvalidSegmentError("segment has no frames")
    if n >= length:
        if length == 1:
            return np.zeros(1, dtype=int)
        i = np.arange(length)
        # round(i * (n-1) / (L-1)) with halves rounded up, in exact integers
        return (2 * i * (n - 1) + (length - 1)) // (2 * (length - 1))
    return np.concatenate([np.arange(n), np.full(length - n, n - 1)])


def resample_fixed(seg: Segment, length: int = SAMPLE_LENGTH) -> np.ndarray:
    """Fixed-length ``6 x length`` motion sample.

    Longer segments are under-sampled uniformly (endpoints kept), shorter
    ones are padded by holding the last pose.
    """
    if len(seg) == 0:
        raise InvalidSegmentError("segment has no frames")
    idx = resample_indices(len(seg), length)
    return seg.frames[idx, 1:].T.copy()


@dataclass(frozen=True)
class QualityConfig:
    min_frames: int = 10
    max_jump_mm: float = 50.0


def quality_filter(seg: Segment, cfg: QualityConfig = QualityConfig()) -> tuple[bool, str]:
    """``(accepted, reason)``; reason is empty for accepted segments."""
    if len(seg) < cfg.min_frames:
        return False, f"too short ({len(seg)} < {cfg.min_frames} frames)"
    if not np.all(np.isfinite(seg.frames)):
        return False, "non-finite values"
    jumps = np.linalg.norm(np.diff(seg.frames[:, 1:4], axis=0), axis=1)
    if jumps.size and jumps.max() > cfg.max_jump_mm:
        return False, f"tracking glitch ({jumps.max():.1f} mm jump)"
    return True, ""


# --- files -------------------------------------------------------------------------

def read_mocap_csv(path: str | Path, cal: MarkerCalibration = MarkerCalibration()) -> np.ndarray:
    """Load a capture stream as ``(n, 7)`` frames.

    Accepts either pre-derived poses (``frame,time,x,y,z,yaw,pitch,roll``) or
    raw marker positions (``frame,time,m1x,...,m3z``), told apart by header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric value ({exc})") from exc
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise FormatError(f"{path}: rows do not match the header width")

    if header == _POSE_HEADER:
        frames = data[:, 1:]
    elif header == _MARKER_HEADER:
        frames = np.array([derive_tip_pose(r[2:].reshape(3, 3), cal, r[1]) for r in data],
                          dtype=float).reshape(-1, len(FRAME_COLUMNS))
    else:
        raise FormatError(f"{path}: unrecognised header {','.join(header)}")
    if len(frames) > 1 and not np.all(np.diff(frames[:, 0]) > 0):
        raise FormatError(f"{path}: time stamps are not strictly increasing")
    return frames


def write_mocap_csv(path: str | Path, frames) -> None:
    arr = _as_frames(frames)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_POSE_HEADER)
        for i, row in enumerate(arr):
            w.writerow([i] + [repr(float(v)) for v in row])


@dataclass
class MotionRecord:
    sheet: str
    cell: int
    frame_range: tuple[int, int]
    sample: np.ndarray = field(repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "sheet": self.sheet,
            "cell": self.cell,
            "frames": list(self.frame_range),
            "values": [float(v) for v in self.sample.ravel()],
        })

    @classmethod
    def from_json(cls, line: str) -> "MotionRecord":
        try:
            obj = json.loads(line)
            values = np.array(obj["values"], dtype=float)
            sample = values.reshape(len(MOTION_ROWS), -1)
            return cls(str(obj["sheet"]), int(obj["cell"]),
                       (int(obj["frames"][0]), int(obj["frames"][1])), sample)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as exc:
            raise FormatError(f"not a motion record ({exc})") from exc


def ingest_stream(frames, layout: GridLayout, sheet: str, z_cut: float = DEFAULT_Z_CUT,
                  quality: QualityConfig = QualityConfig(),
                  length: int = SAMPLE_LENGTH) -> tuple[list[MotionRecord], list[tuple[int, str]]]:
    """Cut, vet, centre and resample every stroke in a stream.

    Each segment goes to the cell whose centre is nearest its mean position.
    Returns the kept records and ``(start_frame, reason)`` for the rejects.
    """
    kept, rejected = [], []
    for seg in segment_by_z(frames, z_cut):
        ok, why = quality_filter(seg, quality)
        if not ok:
            rejected.append((seg.start, why))
            continue
        cx, cy = seg.frames[:, 1].mean(), seg.frames[:, 2].mean()
        cell = layout.nearest_cell(cx, cy)
        sample = resample_fixed(center_segment(seg, cell.center_mm), length)
        kept.append(MotionRecord(sheet, cell.index, (seg.start, seg.stop), sample))
    return kept, rejected


def write_motion_jsonl(path: str | Path, records: Sequence[MotionRecord]) -> None:
    Path(path).write_text("".join(r.to_json() + "\n" for r in records),
                          encoding="utf-8", newline="\n")


def read_motion_jsonl(path: str | Path) -> list[MotionRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [MotionRecord.from_json(line) for line in lines if line.strip()]
