"""Robot painting programs: stroke and motion replay to a neutral text format.

The tool axis stays vertical throughout, so a pose is a position plus a yaw
about the vertical. Narrower stroke classes are painted by turning the flat
brush away from the perpendicular: a brush of full width ``w_max`` turned by
``theta`` leaves a trace about ``w_max * cos(theta)`` wide.

Text format, one action per line::

    MOVE <x> <y> <z> <yaw>      (millimetres / degrees, 3 decimals)
    DIP <color index>
    CLEAN
    DRY
    STROKE_BEGIN <i>
    STROKE_END <i>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import (DegenerateTangentError, FormatError, InvalidParameterError,
                     InvalidSampleError, UnquantizedInputError)
from .quantize import Palette
from .stroke import Stroke, bezier_derivative, bezier_points

DEFAULT_STEP_MM = 2.0
_ARC_TABLE = 4097


def _r3(v: float) -> float:
    # round to the emitted precision; "+ 0.0" turns -0.0 into 0.0
    return round(float(v), 3) + 0.0


@dataclass(frozen=True)
class TargetPose:
    x: float
    y: float
    z: float
    yaw: float


@dataclass(frozen=True)
class CanvasFrame:
    """Placement of the canvas in the robot work frame (millimetres).

    Normalised stroke coordinates map as ``x -> origin_x + x * width_mm`` and
    ``y -> origin_y + (1 - y) * height_mm``; image rows run downward, the
    work frame y axis runs up.
    """

    origin_x: float = 0.0
    origin_y: float = 0.0
    width_mm: float = 300.0
    height_mm: float = 300.0
    z_contact: float = 0.0
    z_travel: float = 20.0

    def __post_init__(self):
        if self.width_mm <= 0 or self.height_mm <= 0:
            raise InvalidParameterError("canvas frame size must be positive")
        if self.z_travel <= self.z_contact:
            raise InvalidParameterError("z_travel must be above z_contact")

    @property
    def scale_mm(self) -> float:
        return max(self.width_mm, self.height_mm)

    @property
    def center(self) -> tuple[float, float]:
        return (self.origin_x + 0.5 * self.width_mm, self.origin_y + 0.5 * self.height_mm)

    def to_mm(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return np.stack([self.origin_x + xy[..., 0] * self.width_mm,
                         self.origin_y + (1.0 - xy[..., 1]) * self.height_mm], axis=-1)

    def contains(self, x: float, y: float, tol: float = 1e-6) -> bool:
        return (self.origin_x - tol <= x <= self.origin_x + self.width_mm + tol
                and self.origin_y - tol <= y <= self.origin_y + self.height_mm + tol)


# --- actions -------------------------------------------------------------------

@dataclass(frozen=True)
class Move:
    pose: TargetPose
    # free-form provenance, not part of the emitted text
    comment: str = field(default="", compare=False)


@dataclass(frozen=True)
class Dip:
    color: int


@dataclass(frozen=True)
class Clean:
    pass


@dataclass(frozen=True)
class Dry:
    pass


@dataclass(frozen=True)
class StrokeBegin:
    index: int


@dataclass(frozen=True)
class StrokeEnd:
    index: int


Action = Union[Move, Dip, Clean, Dry, StrokeBegin, StrokeEnd]


@dataclass(frozen=True)
class RobotProgram:
    actions: tuple[Action, ...] = ()

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def count(self, kind: type) -> int:
        return sum(isinstance(a, kind) for a in self.actions)


def check_program(p: RobotProgram, frame: CanvasFrame | None = None) -> None:
    """Raise InvalidParameterError if ``p`` breaks the pairing or safety rules."""
    open_index = None
    for n, a in enumerate(p.actions):
        if isinstance(a, StrokeBegin):
            if open_index is not None:
                raise InvalidParameterError(f"action {n}: nested STROKE_BEGIN")
            open_index = a.index
        elif isinstance(a, StrokeEnd):
            if open_index != a.index:
                raise InvalidParameterError(f"action {n}: STROKE_END {a.index} without begin")
            open_index = None
        elif isinstance(a, Move) and frame is not None:
            if open_index is None and a.pose.z <= frame.z_contact:
                raise InvalidParameterError(f"action {n}: contact-height move outside a stroke")
            if not frame.contains(a.pose.x, a.pose.y):
                raise InvalidParameterError(f"action {n}: move leaves the canvas frame")
    if open_index is not None:
        raise InvalidParameterError(f"STROKE_BEGIN {open_index} never closed")


# --- stroke conversion -----------------------------------------------------------

def _stroke_width_mm(r0: float, r1: float, frame: CanvasFrame) -> float:
    # mean diameter of the taper
    return (r0 + r1) * frame.scale_mm


def brush_rotation(w_target: float, w_max: float) -> float:
    """Yaw offset in radians that narrows a ``w_max`` brush to ``w_target``."""
    if w_max <= 0:
        raise InvalidParameterError("w_max must be positive")
    return math.acos(min(max(w_target / w_max, 0.0), 1.0))


def _thickness_class(s: Stroke, palette: Palette) -> tuple[float, float]:
    pair = (s.r0, s.r1)
    if pair not in palette.thicknesses:
        raise UnquantizedInputError(f"stroke radii {pair} are not a palette thickness")
    return pair


def stroke_to_poses(s: Stroke, frame: CanvasFrame, palette: Palette,
                    step_mm: float = DEFAULT_STEP_MM) -> list[TargetPose]:
    """Contact poses along ``s`` at roughly uniform arc-length spacing.

    The brush sits perpendicular to the path for the widest palette class
    and turns toward the direction of travel for narrower ones.
    """
    if step_mm <= 0:
        raise InvalidParameterError("step_mm must be positive")
    _thickness_class(s, palette)
    ctrl = frame.to_mm(s.control_points())

    t = np.linspace(0.0, 1.0, _ARC_TABLE)
    pts = bezier_points(ctrl, t)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    length = arc[-1]
    n_seg = max(1, math.ceil(length / step_mm - 1e-9))
    ts = np.interp(np.linspace(0.0, length, n_seg + 1), arc, t) if length > 0 else t[[0, -1]]

    deriv = bezier_derivative(ctrl, ts)
    speed = np.hypot(deriv[:, 0], deriv[:, 1])
    if np.any(speed < 1e-12):
        raise DegenerateTangentError("stroke has a vanishing tangent; cannot orient the brush")

    w_max = max(_stroke_width_mm(a, b, frame) for a, b in palette.thicknesses)
    theta = brush_rotation(_stroke_width_mm(s.r0, s.r1, frame), w_max)
    heading = np.arctan2(deriv[:, 1], deriv[:, 0])
    yaw = np.degrees(heading + 0.5 * math.pi + theta)
    # wrap into (-180, 180]
    yaw = 180.0 - np.mod(180.0 - yaw, 360.0)

    xy = bezier_points(ctrl, ts)
    return [TargetPose(float(x), float(y), float(frame.z_contact), float(a))
            for (x, y), a in zip(xy, yaw)]


def build_program(seq: Sequence[Stroke], frame: CanvasFrame, palette: Palette,
                  step_mm: float = DEFAULT_STEP_MM) -> RobotProgram:
    """Schedule strokes in order with dip / clean / dry between them."""
    actions: list[Action] = []
    prev_gray = None
    for i, s in enumerate(seq):
        try:
            color = palette.gray_index(s.g)
        except ValueError:
            raise UnquantizedInputError(f"stroke {i}: gray {s.g!r} is not in the palette") from None
        poses = stroke_to_poses(s, frame, palette, step_mm)
        if prev_gray is not None and s.g != prev_gray:
            actions += [Clean(), Dry()]
        actions.append(Dip(color))
        actions.append(StrokeBegin(i))
        first, last = poses[0], poses[-1]
        actions.append(Move(TargetPose(first.x, first.y, frame.z_travel, first.yaw)))
        actions.extend(Move(p) for p in poses)
        actions.append(Move(TargetPose(last.x, last.y, frame.z_travel, last.yaw)))
        actions.append(StrokeEnd(i))
        prev_gray = s.g
    return RobotProgram(tuple(actions))


def motion_to_program(m: np.ndarray, frame: CanvasFrame, index: int = 0) -> RobotProgram:
    """Replay one 6x60 motion sample (rows x, y, z, yaw, pitch, roll).

    Positions are relative to the cell centre and are placed around the
    canvas centre. Pitch and roll go into the move comment only; emitted
    poses stay horizontal.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != 6:
        raise InvalidSampleError(f"motion sample must have 6 rows, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidSampleError("motion sample contains non-finite values")
    cx, cy = frame.center
    actions: list[Action] = [StrokeBegin(index)]
    for x, y, z, yaw, pitch, roll in m.T:
        pose = TargetPose(float(cx + x), float(cy + y), float(frame.z_contact + z), float(yaw))
        if not frame.contains(pose.x, pose.y):
            raise InvalidSampleError(f"replayed position ({pose.x}, {pose.y}) leaves the canvas frame")
        actions.append(Move(pose, comment=f"pitch={pitch:.3f} roll={roll:.3f}"))
    actions.append(StrokeEnd(index))
    return RobotProgram(tuple(actions))


# --- text format ---------------------------------------------------------------

def _line(a: Action) -> str:
    if isinstance(a, Move):
        p = a.pose
        return f"MOVE {_r3(p.x):.3f} {_r3(p.y):.3f} {_r3(p.z):.3f} {_r3(p.yaw):.3f}"
    if isinstance(a, Dip):
        return f"DIP {a.color}"
    if isinstance(a, Clean):
        return "CLEAN"
    if isinstance(a, Dry):
        return "DRY"
    if isinstance(a, StrokeBegin):
        return f"STROKE_BEGIN {a.index}"
    if isinstance(a, StrokeEnd):
        return f"STROKE_END {a.index}"
    raise TypeError(f"unknown action {a!r}")


def emit(p: RobotProgram) -> str:
    return "".join(_line(a) + "\n" for a in p.actions)


def parse(text: str) -> RobotProgram:
    """Inverse of :func:`emit`."""
    actions: list[Action] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        op, args = parts[0], parts[1:]
        try:
            if op == "MOVE" and len(args) == 4:
                actions.append(Move(TargetPose(*(float(v) + 0.0 for v in args))))
            elif op == "DIP" and len(args) == 1:
                actions.append(Dip(int(args[0])))
            elif op == "CLEAN" and not args:
                actions.append(Clean())
            elif op == "DRY" and not args:
                actions.append(Dry())
            elif op == "STROKE_BEGIN" and len(args) == 1:
                actions.append(StrokeBegin(int(args[0])))
            elif op == "STROKE_END" and len(args) == 1:
                actions.append(StrokeEnd(int(args[0])))
            else:
                raise ValueError(op)
        except ValueError:
            raise FormatError(f"line {lineno}: cannot parse {line!r}") from None
    return RobotProgram(tuple(actions))


def write_program(path: str | Path, p: RobotProgram) -> None:
    Path(path).write_text(emit(p), encoding="ascii", newline="\n")


def read_program(path: str | Path) -> RobotProgram:
    return parse(Path(path).read_text(encoding="ascii"))
