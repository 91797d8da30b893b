"""Palette reduction of stroke sequences with k-means.

A physical setup has a handful of paint pots and brush widths, so stroke
grays are clustered in 1-D and the (r0, r1) radius pairs in 2-D, and every
stroke is snapped to its cluster centre.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, InfeasibleKError, InvalidParameterError
from .stroke import Stroke


@dataclass(frozen=True)
class QuantizerConfig:
    k_gray: int = 5
    k_thickness: int = 4
    max_iters: int = 100
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k_gray < 1 or self.k_thickness < 1:
            raise InvalidParameterError("cluster counts must be >= 1")
        if self.max_iters < 1 or self.restarts < 1:
            raise InvalidParameterError("max_iters and restarts must be >= 1")


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    # inertia after each assignment step of the winning restart
    history: list[float] = field(default_factory=list)


def _sq_dist(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dist(points, points[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0.0:
            i = int(np.searchsorted(np.cumsum(d2) / total, rng.random(), side="right"))
            i = min(i, n - 1)
        else:
            i = int(rng.integers(n))
        chosen.append(i)
        d2 = np.minimum(d2, _sq_dist(points, points[i:i + 1])[:, 0])
    return points[chosen].copy()


def _cluster_means(points, assign, k, old):
    cent = old.copy()
    for j in range(k):
        members = points[assign == j]
        if len(members) == 0:
            continue
        lo, hi = members.min(axis=0), members.max(axis=0)
        # identical members: keep the exact value, a float mean can drift an ulp
        cent[j] = np.where(lo == hi, lo, np.clip(members.mean(axis=0), lo, hi))
    return cent


def _lloyd(points, centroids, max_iters):
    k = len(centroids)
    history = []
    assign = None
    for _ in range(max_iters):
        d2 = _sq_dist(points, centroids)
        new_assign = d2.argmin(axis=1)
        # empty clusters take the point farthest from its own centre
        for j in range(k):
            if not np.any(new_assign == j):
                own = d2[np.arange(len(points)), new_assign]
                counts = np.bincount(new_assign, minlength=k)
                own = np.where(counts[new_assign] > 1, own, -1.0)
                far = int(own.argmax())
                centroids[j] = points[far]
                d2 = _sq_dist(points, centroids)
                new_assign[far] = j
        inertia = float(d2[np.arange(len(points)), new_assign].sum())
        history.append(inertia)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        centroids = _cluster_means(points, assign, k, centroids)
    return centroids, assign, history[-1], history


def kmeans(points, k: int, max_iters: int = 100, restarts: int = 10, seed: int = 0) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` runs.

    Ties between restarts go to the lowest restart index.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise InvalidParameterError("kmeans needs at least one point")
    if k <= 0:
        raise InvalidParameterError(f"k must be positive, got {k}")
    if k > len(pts):
        raise InfeasibleKError(f"k={k} exceeds the number of points ({len(pts)})")

    best = None
    for seq in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(seq)
        cent, assign, inertia, hist = _lloyd(pts, _plusplus(pts, k, rng), max_iters)
        if best is None or inertia < best.inertia:
            best = KMeansResult(cent, assign, inertia, hist)
    return best


@dataclass(frozen=True)
class Palette:
    """Gray levels ascending and thickness pairs ordered by r0."""

    grays: tuple[float, ...]
    thicknesses: tuple[tuple[float, float], ...]

    def gray_index(self, g: float) -> int:
        return self.grays.index(g)

    def to_json(self) -> str:
        return json.dumps({"grays": list(self.grays),
                           "thicknesses": [list(t) for t in self.thicknesses]})

    @classmethod
    def from_json(cls, text: str) -> "Palette":
        try:
            obj = json.loads(text)
            grays = tuple(float(g) for g in obj["grays"])
            thick = tuple((float(a), float(b)) for a, b in obj["thicknesses"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"not a palette document ({exc})") from exc
        return cls(grays, thick)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path: str | Path) -> "Palette":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def quantize(seq: Sequence[Stroke], cfg: QuantizerConfig = QuantizerConfig()
             ) -> tuple[list[Stroke], Palette]:
    """Snap stroke grays and radius pairs to k-means centres.

    Grays and thicknesses are clustered independently; stroke geometry is
    left untouched.
    """
    if len(seq) == 0:
        raise InvalidParameterError("cannot quantize an empty stroke sequence")
    grays = np.array([[s.g] for s in seq])
    radii = np.array([[s.r0, s.r1] for s in seq])
    gk = kmeans(grays, cfg.k_gray, cfg.max_iters, cfg.restarts, cfg.seed)
    rk = kmeans(radii, cfg.k_thickness, cfg.max_iters, cfg.restarts, cfg.seed + 1)

    # only centres that still own strokes make it into the palette
    g_used = sorted(set(gk.assignments.tolist()), key=lambda j: gk.centroids[j, 0])
    r_used = sorted(set(rk.assignments.tolist()), key=lambda j: tuple(rk.centroids[j]))
    out = [
        replace(s,
                g=float(gk.centroids[gk.assignments[i], 0]),
                r0=float(rk.centroids[rk.assignments[i], 0]),
                r1=float(rk.centroids[rk.assignments[i], 1]))
        for i, s in enumerate(seq)
    ]
    palette = Palette(
        tuple(float(gk.centroids[j, 0]) for j in g_used),
        tuple((float(rk.centroids[j, 0]), float(rk.centroids[j, 1])) for j in r_used),
    )
    return out, palette
