"""Greedy stroke-based rendering: residual-guided proposals plus hill climbing.

Each step draws ``proposals_per_step`` candidate strokes where the canvas is
furthest from the target, keeps the best, polishes it with a short random
local search and paints it if it lowers the mean squared error enough.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .canvas import DEFAULT_DENSITY, Canvas, stroke_footprint
from .errors import InvalidParameterError, NoResidualError, ShapeError
from .stroke import DEFAULT_RHO, MAX_RADIUS, Stroke, restrict_control, unrestrict_control

log = logging.getLogger(__name__)

MIN_RADIUS = 0.005

# per-parameter perturbation scale: six coordinates, two radii (relative), gray
_COORD_SIGMA = 0.03
_RADIUS_REL_SIGMA = 0.25
_GRAY_SIGMA = 0.05


@dataclass(frozen=True)
class SbrConfig:
    budget: int = 250
    proposals_per_step: int = 64
    refine_iters: int = 30
    rho: float = DEFAULT_RHO
    min_improvement: float = 1e-6
    seed: int = 0
    density: float = DEFAULT_DENSITY

    def __post_init__(self):
        if self.budget < 0:
            raise InvalidParameterError("budget must be >= 0")
        if self.proposals_per_step < 1:
            raise InvalidParameterError("proposals_per_step must be >= 1")
        if self.refine_iters < 0:
            raise InvalidParameterError("refine_iters must be >= 0")
        if self.min_improvement < 0:
            raise InvalidParameterError("min_improvement must be >= 0")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidParameterError("rho must lie in [0, 1]")


class _Objective:
    """Squared-error bookkeeping that scores a stroke from its footprint only."""

    def __init__(self, target: np.ndarray, current: np.ndarray, density: float):
        self.target = target
        self.current = np.array(current, dtype=np.float64)
        self.err = (self.current - target) ** 2
        self.total = float(self.err.sum())
        self.n = target.size
        self.density = density

    @property
    def loss(self) -> float:
        return self.total / self.n

    def _delta(self, stroke: Stroke):
        fp = stroke_footprint(self.target.shape, stroke, self.density)
        if fp is None:
            return 0.0, None
        r, c, m = fp
        win = (slice(r, r + m.shape[0]), slice(c, c + m.shape[1]))
        t = self.target[win][m]
        new = (stroke.g - t) ** 2
        return float(new.sum() - self.err[win][m].sum()), (win, m, new)

    def loss_with(self, stroke: Stroke) -> float:
        return (self.total + self._delta(stroke)[0]) / self.n

    def apply(self, stroke: Stroke) -> None:
        _, hit = self._delta(stroke)
        if hit is not None:
            win, m, new = hit
            self.current[win][m] = stroke.g
            self.err[win][m] = new
            # recompute rather than accumulate so the trace carries no drift
            self.total = float(self.err.sum())


def _check_pair(target: Canvas, current: Canvas) -> None:
    if target.shape != current.shape:
        raise ShapeError(f"target {target.shape} and canvas {current.shape} differ")


def _residual_cdf(target: np.ndarray, current: np.ndarray) -> np.ndarray:
    resid = np.abs(target - current).ravel()
    total = resid.sum()
    if total <= 0.0:
        raise NoResidualError("canvas already matches the target")
    cdf = np.cumsum(resid)
    return cdf / cdf[-1]


def _draw(cdf, target: np.ndarray, rng: np.random.Generator, rho: float) -> Stroke:
    h, w = target.shape
    idx = np.searchsorted(cdf, rng.random(2), side="right")
    idx = np.minimum(idx, cdf.size - 1)
    rows, cols = np.divmod(idx, w)
    jitter = rng.random((2, 2))
    x0, x2 = (cols + jitter[:, 0]) / w
    y0, y2 = (rows + jitter[:, 1]) / h

    chord = np.hypot(x2 - x0, y2 - y0)
    x1, y1 = np.clip(
        np.array([0.5 * (x0 + x2), 0.5 * (y0 + y2)]) + rng.normal(0.0, 0.5 * chord + 1e-3, 2),
        0.0, 1.0,
    )

    r0, r1 = np.exp(rng.uniform(np.log(MIN_RADIUS), np.log(MAX_RADIUS), 2))
    ri, ci = rows[0], cols[0]
    g = float(target[max(ri - 1, 0):ri + 2, max(ci - 1, 0):ci + 2].mean())

    raw = Stroke(*(float(v) for v in (x0, y0, x1, y1, x2, y2)),
                 min(float(r0), MAX_RADIUS), min(float(r1), MAX_RADIUS), min(max(g, 0.0), 1.0))
    return restrict_control(raw, rho)


def propose_stroke(target: Canvas, current: Canvas, rng: np.random.Generator,
                   rho: float = DEFAULT_RHO) -> Stroke:
    """Draw one restricted stroke, biased toward pixels with large residual.

    Both endpoints are sampled with probability proportional to
    ``|target - current|``; the gray is the local target mean around the
    start point and the radii are log-uniform in ``(MIN_RADIUS, 0.25]``.

    Raises NoResidualError when there is nothing left to paint.
    """
    _check_pair(target, current)
    cdf = _residual_cdf(target.pixels, current.pixels)
    return _draw(cdf, target.pixels, rng, rho)


def _perturb(raw: np.ndarray, rng: np.random.Generator, scale: float) -> np.ndarray:
    v = raw.copy()
    v[:6] += rng.normal(0.0, _COORD_SIGMA * scale, 6)
    v[6:8] += rng.normal(0.0, 1.0, 2) * _RADIUS_REL_SIGMA * scale * v[6:8]
    v[8] += rng.normal(0.0, _GRAY_SIGMA * scale)
    v[:6] = np.clip(v[:6], 0.0, 1.0)
    v[6:8] = np.clip(v[6:8], MIN_RADIUS, MAX_RADIUS)
    v[8] = min(max(v[8], 0.0), 1.0)
    return v


def _refine(obj: _Objective, s: Stroke, iters: int, rng: np.random.Generator,
            rho: float) -> tuple[Stroke, float]:
    best = s
    best_loss = obj.loss_with(s)
    raw = unrestrict_control(s, rho).as_array()
    for i in range(iters):
        # shrink the step from full scale to a fifth over the run
        scale = 1.0 - 0.8 * i / max(iters - 1, 1)
        cand_raw = _perturb(raw, rng, scale)
        cand = restrict_control(Stroke.from_array(cand_raw), rho)
        loss = obj.loss_with(cand)
        if loss < best_loss:
            best, best_loss, raw = cand, loss, cand_raw
    return best, best_loss


def refine_stroke(target: Canvas, current: Canvas, s: Stroke, iters: int,
                  rng: np.random.Generator, rho: float = DEFAULT_RHO,
                  density: float = DEFAULT_DENSITY) -> Stroke:
    """Hill-climb ``s`` by Gaussian perturbation, accepting only improvements.

    The search runs on the unrestricted middle point and re-applies the
    restriction to every candidate, so the result stays restricted.
    """
    _check_pair(target, current)
    if iters < 0:
        raise InvalidParameterError("iters must be >= 0")
    obj = _Objective(target.pixels, current.pixels, density)
    return _refine(obj, s, iters, rng, rho)[0]


def _stream(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *path]))


def paint_with_trace(target: Canvas, cfg: SbrConfig) -> tuple[list[Stroke], list[float]]:
    """Run the greedy painter; ``trace[i]`` is the MSE after ``i`` strokes."""
    obj = _Objective(target.pixels, np.ones(target.shape), cfg.density)
    strokes: list[Stroke] = []
    trace = [obj.loss]
    for step in range(cfg.budget):
        try:
            cdf = _residual_cdf(obj.target, obj.current)
        except NoResidualError:
            break
        # Candidate k always comes from its own stream, so evaluating the
        # candidates in any order or in parallel gives the same winner.
        cands = [_draw(cdf, obj.target, _stream(cfg.seed, step, 0, k), cfg.rho)
                 for k in range(cfg.proposals_per_step)]
        losses = [obj.loss_with(c) for c in cands]
        best = int(np.argmin(losses))
        stroke, loss = _refine(obj, cands[best], cfg.refine_iters,
                               _stream(cfg.seed, step, 1), cfg.rho)
        gain = obj.loss - loss
        if gain <= 0.0 or gain < cfg.min_improvement:
            log.debug("step %d: best gain %.3g below threshold, stopping", step, gain)
            break
        obj.apply(stroke)
        strokes.append(stroke)
        trace.append(obj.loss)
        log.debug("step %d: mse %.6f", step, obj.loss)
    return strokes, trace


def paint(target: Canvas, cfg: SbrConfig) -> list[Stroke]:
    return paint_with_trace(target, cfg)[0]
