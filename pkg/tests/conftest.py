import time

import numpy as np
import pytest

from robopaint import sbr, vae
from robopaint.canvas import Canvas

# (number, title, passed, detail) for every acceptance criterion that ran
CRITERIA: list[tuple[int, str, bool, str]] = []


def disc_target(n: int, radius_frac: float = 0.3) -> Canvas:
    """Black disc centred on a white n x n canvas."""
    yy, xx = np.mgrid[:n, :n] + 0.5
    inside = (xx - n / 2) ** 2 + (yy - n / 2) ** 2 <= (radius_frac * n) ** 2
    return Canvas(np.where(inside, 0.0, 1.0))


def brute_force_mask(shape, s, n_t: int = 20001) -> np.ndarray:
    """Painted pixels by direct distance to a dense sampling of the curve."""
    h, w = shape
    m = max(h, w)
    t = np.linspace(0.0, 1.0, n_t)
    u = 1.0 - t
    bx = (u * u * s.x0 + 2 * u * t * s.x1 + t * t * s.x2) * w
    by = (u * u * s.y0 + 2 * u * t * s.y1 + t * t * s.y2) * h
    r = (u * s.r0 + t * s.r1) * m
    out = np.zeros(shape, dtype=bool)
    for i in range(h):
        for j in range(w):
            out[i, j] = np.any(np.hypot(j + 0.5 - bx, i + 0.5 - by) - r <= 0.0)
    return out


@pytest.fixture(scope="session")
def disc_run():
    """The 64x64 disc painted with budget 250, seed 7, timed."""
    target = disc_target(64)
    t0 = time.perf_counter()
    strokes, trace = sbr.paint_with_trace(target, sbr.SbrConfig(budget=250, seed=7))
    return target, strokes, trace, time.perf_counter() - t0


@pytest.fixture(scope="session")
def vae_corpus():
    return vae.synthetic_corpus(200, seed=0)


@pytest.fixture(scope="session")
def trained_vae(vae_corpus):
    """50 epochs on the 200-image synthetic corpus, timed."""
    images, _ = vae_corpus
    t0 = time.perf_counter()
    model, history = vae.train(images, vae.VaeConfig(epochs=50, seed=0))
    return model, history, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(CRITERIA):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")


def golden_program_inputs():
    """Frozen 3-stroke fixture behind tests/data/golden_3stroke.rprog."""
    from robopaint.program import CanvasFrame
    from robopaint.quantize import Palette
    from robopaint.stroke import Stroke

    palette = Palette(grays=(0.2, 0.8), thicknesses=((0.01, 0.02), (0.03, 0.05)))
    strokes = [
        Stroke(0.1, 0.1, 0.5, 0.3, 0.9, 0.1, 0.03, 0.05, 0.2),
        Stroke(0.2, 0.8, 0.35, 0.6, 0.5, 0.7, 0.01, 0.02, 0.8),
        Stroke(0.7, 0.9, 0.75, 0.6, 0.9, 0.4, 0.01, 0.02, 0.8),
    ]
    frame = CanvasFrame(origin_x=10.0, origin_y=20.0, width_mm=200.0, height_mm=150.0,
                        z_contact=1.0, z_travel=25.0)
    return strokes, palette, frame, 5.0
