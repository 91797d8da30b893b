import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robopaint.canvas import Canvas, mse, render_sequence
from robopaint.errors import FormatError, InfeasibleKError, InvalidParameterError
from robopaint.quantize import Palette, QuantizerConfig, kmeans, quantize
from robopaint.stroke import Stroke

point_sets = st.integers(1, 3).flatmap(
    lambda d: st.lists(st.lists(st.floats(0, 1), min_size=d, max_size=d), min_size=1, max_size=25))


def test_k_equals_n():
    pts = np.array([[0.1, 0.2], [0.5, 0.5], [0.9, 0.0]])
    res = kmeans(pts, 3, seed=0)
    assert res.inertia == 0.0
    assert sorted(map(tuple, res.centroids)) == sorted(map(tuple, pts))


def test_identical_points():
    res = kmeans(np.full((6, 1), 0.3), 1)
    assert res.centroids[0, 0] == 0.3 and res.inertia == 0.0


def test_four_point_example():
    res = kmeans(np.array([0.0, 0.1, 0.9, 1.0]), 2, seed=0)
    assert sorted(res.centroids[:, 0]) == pytest.approx([0.05, 0.95], abs=1e-15)
    assert res.inertia == pytest.approx(0.01, abs=1e-12)


def test_errors():
    with pytest.raises(InfeasibleKError):
        kmeans(np.zeros((2, 1)), 3)
    with pytest.raises(InvalidParameterError):
        kmeans(np.zeros((2, 1)), 0)
    with pytest.raises(InvalidParameterError):
        kmeans(np.zeros((0, 1)), 1)
    with pytest.raises(InvalidParameterError):
        QuantizerConfig(k_gray=0)


@settings(max_examples=80, deadline=None)
@given(point_sets, st.integers(1, 6), st.integers(0, 1000))
def test_kmeans_properties(points, k, seed):
    pts = np.array(points)
    k = min(k, len(pts))
    res = kmeans(pts, k, max_iters=100, restarts=3, seed=seed)
    d2 = ((pts[:, None, :] - res.centroids[None]) ** 2).sum(-1)
    # nearest-centroid assignment at convergence
    assert np.all(d2[np.arange(len(pts)), res.assignments] <= d2.min(axis=1) + 1e-12)
    assert res.inertia == pytest.approx(d2.min(axis=1).sum(), abs=1e-12)
    assert all(b <= a + 1e-12 for a, b in zip(res.history, res.history[1:]))
    again = kmeans(pts, k, max_iters=100, restarts=3, seed=seed)
    assert np.array_equal(again.centroids, res.centroids)
    assert np.array_equal(again.assignments, res.assignments)


def _random_strokes(rng, n):
    return [Stroke(*rng.random(6), *rng.uniform(0.01, 0.25, 2), rng.random()) for _ in range(n)]


def test_already_quantized_is_fixed_point():
    rng = np.random.default_rng(0)
    grays = [0.1, 0.3, 0.5, 0.7, 0.9]
    thick = [(0.01, 0.02), (0.05, 0.05), (0.1, 0.08), (0.2, 0.25)]
    seq = []
    for i in range(20):
        seq.append(Stroke(*rng.random(6), *thick[i % 4], grays[i % 5]))
    out, palette = quantize(seq)
    assert out == seq
    assert palette.grays == tuple(grays) and palette.thicknesses == tuple(thick)


def test_single_stroke():
    s = Stroke(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.07, 0.03, 0.42)
    out, palette = quantize([s], QuantizerConfig(k_gray=1, k_thickness=1))
    assert out == [s]
    assert palette == Palette((0.42,), ((0.07, 0.03),))


def test_quantize_errors():
    with pytest.raises(InvalidParameterError):
        quantize([])
    with pytest.raises(InfeasibleKError):
        quantize(_random_strokes(np.random.default_rng(0), 3))


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 40), st.integers(0, 2**32 - 1))
def test_quantize_bounds_and_geometry(n, seed):
    seq = _random_strokes(np.random.default_rng(seed), n)
    out, palette = quantize(seq, QuantizerConfig(restarts=2, seed=seed))
    assert len({s.g for s in out}) <= 5 and len({(s.r0, s.r1) for s in out}) <= 4
    assert all(a.as_array()[:6].tolist() == b.as_array()[:6].tolist() for a, b in zip(seq, out))
    assert list(palette.grays) == sorted(palette.grays)
    assert list(palette.thicknesses) == sorted(palette.thicknesses)
    assert {s.g for s in out} == set(palette.grays)


def test_quantized_disc_run_loses_fidelity(disc_run):
    target, strokes, trace, _ = disc_run
    out, _ = quantize(strokes)
    blank = Canvas.blank(target.width, target.height)
    assert mse(render_sequence(blank, out), target) > trace[-1]


def test_palette_json(tmp_path):
    p = Palette((0.1, 0.5), ((0.01, 0.02), (0.1, 0.2)))
    assert p.to_json() == '{"grays": [0.1, 0.5], "thicknesses": [[0.01, 0.02], [0.1, 0.2]]}'
    p.save(tmp_path / "p.json")
    assert Palette.load(tmp_path / "p.json") == p
    with pytest.raises(FormatError):
        Palette.from_json('{"grays": [0.1]}')
