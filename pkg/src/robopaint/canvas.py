"""Grayscale raster canvas with opaque, hard-edged stroke stamping.

A pixel is painted by a stroke when its centre lies within the stroke's
local radius of some point on the centre curve. The footprint is computed
as the sign of ``min_t |c - B(t)| - r(t)`` per pixel: a coarse sweep over
``t`` brackets the minimum and golden-section search pins it down, so the
result does not depend on the sweep density beyond floating-point noise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError, InvalidParameterError, ShapeError
from .stroke import Stroke, bezier_points

DEFAULT_DENSITY = 4.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_ITERS = 48
_BLOCK = 4


@dataclass(frozen=True, eq=False)
class Canvas:
    """Row-major grayscale image, values in [0, 1], 1.0 is white.

    Canvases behave as values: every operation returns a new one and the
    pixel array is marked read-only.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ShapeError(f"canvas needs a non-empty 2-D array, got shape {px.shape}")
        if not np.all((px >= 0.0) & (px <= 1.0)):
            raise InvalidParameterError("canvas intensities must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def blank(cls, width: int, height: int, value: float = 1.0) -> "Canvas":
        if width <= 0 or height <= 0:
            raise InvalidParameterError("canvas dimensions must be positive")
        return cls(np.full((height, width), float(value)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, Canvas):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"Canvas({self.width}x{self.height}, mean={self.pixels.mean():.4f})"


# --- footprint -----------------------------------------------------------------

def _stroke_geometry(stroke, width: int, height: int):
    """Control points and radii in pixel units, from a Stroke or 9-vector."""
    v = stroke.as_array() if isinstance(stroke, Stroke) else np.asarray(stroke, dtype=float)
    scale = float(max(width, height))
    ctrl = v[:6].reshape(3, 2) * np.array([width, height], dtype=float)
    return ctrl, v[6] * scale, v[7] * scale


def stroke_footprint(shape: tuple[int, int], stroke, density: float = DEFAULT_DENSITY):
    """Painted-pixel mask of ``stroke`` on a canvas of ``shape`` (rows, cols).

    Returns ``(row0, col0, mask)`` where ``mask`` covers the clipped bounding
    box starting at ``(row0, col0)``, or ``None`` if the stroke misses the
    canvas entirely.
    """
    if density <= 0:
        raise InvalidParameterError("samples_per_unit_length must be positive")
    height, width = shape
    ctrl, r0, r1 = _stroke_geometry(stroke, width, height)

    leg0 = float(np.hypot(*(ctrl[1] - ctrl[0])))
    leg1 = float(np.hypot(*(ctrl[2] - ctrl[1])))
    n = max(2, int(math.ceil(density * (leg0 + leg1))) + 1)
    t = np.linspace(0.0, 1.0, n)
    pts = bezier_points(ctrl, t)
    rad = (1.0 - t) * r0 + t * r1

    # convex-hull property: the curve stays in the control-point box
    rmax = max(r0, r1)
    lo = ctrl.min(axis=0) - rmax
    hi = ctrl.max(axis=0) + rmax
    c0 = max(0, int(math.ceil(lo[0] - 0.5)))
    c1 = min(width - 1, int(math.floor(hi[0] - 0.5)))
    r0_ = max(0, int(math.ceil(lo[1] - 0.5)))
    r1_ = min(height - 1, int(math.floor(hi[1] - 0.5)))
    if c1 < c0 or r1_ < r0_:
        return None

    nr, nc = r1_ - r0_ + 1, c1 - c0 + 1
    # |d gap / dt| <= |B'(t)| + |r1 - r0|, so between samples the true minimum
    # can undercut the sampled one by at most slack.
    dt = 1.0 / (n - 1)
    slack = (2.0 * max(leg0, leg1) + abs(r1 - r0)) * dt / 2.0
    ctx = (ctrl, r0, r1, t, pts, rad, dt, slack)

    if nr * nc <= 4 * _BLOCK * _BLOCK:
        gy, gx = np.mgrid[r0_:r1_ + 1, c0:c1 + 1]
        painted = _classify(ctx, gx.ravel() + 0.5, gy.ravel() + 0.5)
        return r0_, c0, painted.reshape(nr, nc)

    # The gap is 1-Lipschitz in pixel position, so a block whose centre is
    # deep inside (or far outside) the stroke is decided without visiting
    # its pixels.
    B = _BLOCK
    nbr, nbc = -(-nr // B), -(-nc // B)
    by, bx = np.mgrid[0:nbr, 0:nbc]
    bcx = (c0 + bx.ravel() * B + B / 2.0)
    bcy = (r0_ + by.ravel() * B + B / 2.0)
    half = (B - 1) / 2.0 * math.sqrt(2.0)
    bgap = _sampled_gap(pts, rad, bcx, bcy).min(axis=1)
    full = (bgap <= -half).reshape(nbr, nbc)
    mixed = ((bgap > -half) & (bgap <= half + slack)).reshape(nbr, nbc)

    mask = np.repeat(np.repeat(full, B, axis=0), B, axis=1)[:nr, :nc]
    mixed_px = np.repeat(np.repeat(mixed, B, axis=0), B, axis=1)[:nr, :nc]
    if mixed_px.any():
        iy, ix = np.nonzero(mixed_px)
        mask[iy, ix] = _classify(ctx, ix + c0 + 0.5, iy + r0_ + 0.5)
    return r0_, c0, mask


def _sampled_gap(pts, rad, px, py):
    dx = px[:, None] - pts[None, :, 0]
    dy = py[:, None] - pts[None, :, 1]
    return np.sqrt(dx * dx + dy * dy) - rad[None, :]


def _classify(ctx, px, py):
    """Painted flag for pixel centres (px, py)."""
    ctrl, r0, r1, t, pts, rad, dt, slack = ctx
    gap = _sampled_gap(pts, rad, px, py)
    gmin = gap.min(axis=1)
    painted = gmin <= 0.0
    unsure = ~painted & (gmin <= slack)
    if np.any(unsure):
        idx = np.flatnonzero(unsure)
        pix, k = np.nonzero(gap[idx] <= gmin[idx, None] + slack)
        lo_t = np.maximum(t[k] - dt, 0.0)
        hi_t = np.minimum(t[k] + dt, 1.0)
        best = _golden_min(ctrl, r0, r1, px[idx[pix]], py[idx[pix]], lo_t, hi_t)
        hit = np.zeros(idx.size, dtype=bool)
        np.logical_or.at(hit, pix, best <= 0.0)
        painted[idx[hit]] = True
    return painted


def _gap(ctrl, r0, r1, px, py, t):
    u = 1.0 - t
    bx = u * u * ctrl[0, 0] + 2.0 * u * t * ctrl[1, 0] + t * t * ctrl[2, 0]
    by = u * u * ctrl[0, 1] + 2.0 * u * t * ctrl[1, 1] + t * t * ctrl[2, 1]
    return np.hypot(px - bx, py - by) - (u * r0 + t * r1)


def _golden_min(ctrl, r0, r1, px, py, a, b):
    """Vectorised golden-section search of the gap over brackets [a, b]."""
    a = a.copy()
    b = b.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _gap(ctrl, r0, r1, px, py, c)
    fd = _gap(ctrl, r0, r1, px, py, d)
    best = np.minimum(np.minimum(fc, fd),
                      np.minimum(_gap(ctrl, r0, r1, px, py, a), _gap(ctrl, r0, r1, px, py, b)))
    for _ in range(_GOLDEN_ITERS):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        # reuse one interior point, evaluate the other
        new_c = b - _GOLDEN * (b - a)
        new_d = a + _GOLDEN * (b - a)
        f_new = _gap(ctrl, r0, r1, px, py, np.where(left, new_c, new_d))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = new_c, new_d
        best = np.minimum(best, f_new)
    return best


def footprint_mask(shape: tuple[int, int], stroke, density: float = DEFAULT_DENSITY) -> np.ndarray:
    """Full-size boolean mask of painted pixels."""
    out = np.zeros(shape, dtype=bool)
    fp = stroke_footprint(shape, stroke, density)
    if fp is not None:
        r, c, m = fp
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
    return out


# --- rendering -----------------------------------------------------------------

def render_stroke(c: Canvas, s: Stroke, samples_per_unit_length: float = DEFAULT_DENSITY,
                  supersample: int = 1) -> Canvas:
    """Overpaint ``s`` onto a copy of ``c`` with its gray value, no blending.

    ``supersample > 1`` is for previews only: coverage is measured on a finer
    grid and the gray is mixed in proportion to it.
    """
    if supersample < 1:
        raise InvalidParameterError("supersample must be >= 1")
    px = np.array(c.pixels)
    if supersample == 1:
        fp = stroke_footprint(c.shape, s, samples_per_unit_length)
        if fp is not None:
            r, col, m = fp
            px[r:r + m.shape[0], col:col + m.shape[1]][m] = s.g
    else:
        k = supersample
        fine = footprint_mask((c.height * k, c.width * k), s, samples_per_unit_length)
        cover = fine.reshape(c.height, k, c.width, k).mean(axis=(1, 3))
        px = (1.0 - cover) * px + cover * s.g
    return Canvas(px)


def render_sequence(c: Canvas, seq: Iterable[Stroke],
                    samples_per_unit_length: float = DEFAULT_DENSITY) -> Canvas:
    px = np.array(c.pixels)
    for s in seq:
        fp = stroke_footprint(c.shape, s, samples_per_unit_length)
        if fp is not None:
            r, col, m = fp
            px[r:r + m.shape[0], col:col + m.shape[1]][m] = s.g
    return Canvas(px)


def mse(a: Canvas, b: Canvas) -> float:
    if a.shape != b.shape:
        raise ShapeError(f"canvas shapes differ: {a.shape} vs {b.shape}")
    d = a.pixels - b.pixels
    return float(np.mean(d * d))


# --- PGM I/O -------------------------------------------------------------------

_PGM_HEADER = re.compile(rb"\A(P[25])\s+(?:#.*\s+)*(\d+)\s+(?:#.*\s+)*(\d+)\s+(?:#.*\s+)*(\d+)\s")


def to_bytes(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to 0..255, rounding halves up."""
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_pgm(pixels: np.ndarray) -> bytes:
    pixels = np.asarray(pixels)
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + to_bytes(pixels).tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    m = _PGM_HEADER.match(data)
    if m is None:
        raise FormatError("not a PGM (P2/P5) image")
    magic, w, h, maxval = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if not 0 < maxval < 65536:
        raise FormatError(f"bad PGM maxval {maxval}")
    body = data[m.end():]
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        need = w * h * dtype.itemsize
        if len(body) < need:
            raise FormatError("truncated PGM raster")
        raw = np.frombuffer(body[:need], dtype=dtype)
    else:
        raw = np.array(body.split()[: w * h], dtype=np.int64)
        if raw.size != w * h:
            raise FormatError("truncated PGM raster")
    return np.minimum(raw.reshape(h, w).astype(np.float64) / maxval, 1.0)


def write_pgm(path: str | Path, canvas: Canvas | np.ndarray) -> None:
    pixels = canvas.pixels if isinstance(canvas, Canvas) else canvas
    Path(path).write_bytes(encode_pgm(pixels))


def read_pgm(path: str | Path) -> Canvas:
    return Canvas(decode_pgm(Path(path).read_bytes()))
