"""Quadratic Bezier brushstrokes with tapered radius and a gray value.

Coordinates are fractions of the canvas width/height, radii are fractions of
the larger canvas dimension, and ``g`` runs from 0 (black) to 1 (white).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateTangentError, FormatError, InvalidParameterError

MAX_RADIUS = 0.25
DEFAULT_RHO = 0.5
FIELD_NAMES = ("x0", "y0", "x1", "y1", "x2", "y2", "r0", "r1", "g")


@dataclass(frozen=True)
class Stroke:
    x0: float
    y0: float
    x1: float
    y1: float
    x2: float
    y2: float
    r0: float
    r1: float
    g: float

    def __post_init__(self):
        for name in FIELD_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        for name in FIELD_NAMES[:6]:
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameterError(f"{name}={getattr(self, name)!r} outside [0, 1]")
        for name in ("r0", "r1"):
            if not 0.0 < getattr(self, name) <= MAX_RADIUS:
                raise InvalidParameterError(
                    f"{name}={getattr(self, name)!r} outside (0, {MAX_RADIUS}]"
                )
        if not 0.0 <= self.g <= 1.0:
            raise InvalidParameterError(f"g={self.g!r} outside [0, 1]")

    @property
    def p0(self) -> tuple[float, float]:
        return (self.x0, self.y0)

    @property
    def p1(self) -> tuple[float, float]:
        return (self.x1, self.y1)

    @property
    def p2(self) -> tuple[float, float]:
        return (self.x2, self.y2)

    def control_points(self) -> np.ndarray:
        """Return the 3x2 array of control points."""
        return np.array([[self.x0, self.y0], [self.x1, self.y1], [self.x2, self.y2]])

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FIELD_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "Stroke":
        return cls(*(float(v) for v in values))

    def to_dict(self) -> dict:
        return {n: getattr(self, n) for n in FIELD_NAMES}


def _check_t(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise InvalidParameterError(f"curve parameter t={t!r} outside [0, 1]")


def restrict_control(s: Stroke, rho: float = DEFAULT_RHO) -> Stroke:
    """Pull the middle control point toward the chord midpoint by ``rho``.

    ``rho=0`` leaves the stroke alone, ``rho=1`` makes it a straight segment.
    """
    if not 0.0 <= rho <= 1.0:
        raise InvalidParameterError(f"rho={rho!r} outside [0, 1]")
    mx = 0.5 * (s.x0 + s.x2)
    my = 0.5 * (s.y0 + s.y2)
    return replace(s, x1=_pull(s.x1, mx, rho), y1=_pull(s.y1, my, rho))


def _pull(a: float, b: float, rho: float) -> float:
    # exact at rho = 0 and rho = 1; the clamp guards against a 1-ulp
    # overshoot past the segment ends in between
    v = (1.0 - rho) * a + rho * b
    return min(max(v, min(a, b)), max(a, b))


def unrestrict_control(s: Stroke, rho: float = DEFAULT_RHO) -> Stroke:
    """Invert :func:`restrict_control` where possible.

    The raw middle point is clamped to the unit square. For ``rho=1`` the
    pull is not invertible and the stroke is returned unchanged.
    """
    if not 0.0 <= rho <= 1.0:
        raise InvalidParameterError(f"rho={rho!r} outside [0, 1]")
    if rho == 1.0:
        return s
    mx = 0.5 * (s.x0 + s.x2)
    my = 0.5 * (s.y0 + s.y2)
    x1 = min(1.0, max(0.0, mx + (s.x1 - mx) / (1.0 - rho)))
    y1 = min(1.0, max(0.0, my + (s.y1 - my) / (1.0 - rho)))
    return replace(s, x1=x1, y1=y1)


def is_restricted(s: Stroke, rho: float = DEFAULT_RHO, tol: float = 1e-12) -> bool:
    """True if ``s`` is the restriction of some valid stroke.

    Equivalently, ``s`` is a fixed point of restrict-after-unrestrict: its
    middle point lies in the unit square shrunk by ``1 - rho`` about the
    chord midpoint.
    """
    back = restrict_control(unrestrict_control(s, rho), rho)
    return abs(back.x1 - s.x1) <= tol and abs(back.y1 - s.y1) <= tol


def eval_point(s: Stroke, t: float) -> tuple[float, float]:
    _check_t(t)
    u = 1.0 - t
    a, b, c = u * u, 2.0 * u * t, t * t
    return (a * s.x0 + b * s.x1 + c * s.x2, a * s.y0 + b * s.y1 + c * s.y2)


def eval_radius(s: Stroke, t: float) -> float:
    _check_t(t)
    r = (1.0 - t) * s.r0 + t * s.r1
    # the blend can land an ulp outside the end radii
    return min(max(r, min(s.r0, s.r1)), max(s.r0, s.r1))


def eval_tangent(s: Stroke, t: float) -> tuple[float, float]:
    """Unit direction of travel at ``t``.

    Raises DegenerateTangentError where the derivative vanishes, e.g. a
    point stroke or ``t=0`` with P1 == P0.
    """
    _check_t(t)
    dx = 2.0 * (1.0 - t) * (s.x1 - s.x0) + 2.0 * t * (s.x2 - s.x1)
    dy = 2.0 * (1.0 - t) * (s.y1 - s.y0) + 2.0 * t * (s.y2 - s.y1)
    norm = math.hypot(dx, dy)
    if norm < 1e-15:
        raise DegenerateTangentError(f"zero derivative at t={t!r}")
    return (dx / norm, dy / norm)


def bezier_points(ctrl: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Vectorised curve evaluation; ``ctrl`` is 3x2 in any units, returns len(t) x 2."""
    t = np.asarray(t, dtype=float)[:, None]
    u = 1.0 - t
    return u * u * ctrl[0] + 2.0 * u * t * ctrl[1] + t * t * ctrl[2]


def bezier_derivative(ctrl: np.ndarray, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)[:, None]
    return 2.0 * (1.0 - t) * (ctrl[1] - ctrl[0]) + 2.0 * t * (ctrl[2] - ctrl[1])


# --- serialisation -----------------------------------------------------------

def dumps_jsonl(strokes: Iterable[Stroke]) -> str:
    return "".join(json.dumps(s.to_dict()) + "\n" for s in strokes)


def loads_jsonl(text: str) -> list[Stroke]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out.append(Stroke(*(float(obj[n]) for n in FIELD_NAMES)))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"line {lineno}: not a stroke record ({exc})") from exc
    return out


def write_strokes(path: str | Path, strokes: Iterable[Stroke]) -> None:
    Path(path).write_text(dumps_jsonl(strokes), encoding="utf-8", newline="\n")


def read_strokes(path: str | Path) -> list[Stroke]:
    return loads_jsonl(Path(path).read_text(encoding="utf-8"))

