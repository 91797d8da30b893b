import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robopaint import dataprep
from robopaint.canvas import Canvas
from robopaint.dataprep import (Cell, GridLayout, MarkerCalibration, QualityConfig, Segment,
                                center_segment, crop_cells, derive_tip_pose, grid20_layout,
                                normalize_stroke_image, quality_filter, resample_fixed,
                                resize_bilinear, segment_by_z)
from robopaint.errors import (DegenerateRigidBodyError, FormatError, InvalidSegmentError,
                              LayoutError)

REF = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def rot_zyx(yaw, pitch, roll):
    cy, sy = math.cos(math.radians(yaw)), math.sin(math.radians(yaw))
    cp, sp = math.cos(math.radians(pitch)), math.sin(math.radians(pitch))
    cr, sr = math.cos(math.radians(roll)), math.sin(math.radians(roll))
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    return rz @ ry @ rx


def frames_from_z(z):
    z = np.asarray(z, dtype=float)
    f = np.zeros((len(z), 7))
    f[:, 0] = np.arange(len(z)) / 120.0
    f[:, 3] = z
    return f


# --- stroke sheets ----------------------------------------------------------------

def test_single_cell_crop_is_identity():
    scan = Canvas(np.random.default_rng(0).random((7, 9)))
    layout = SimpleNamespace(cells=(Cell(0, (0, 0, 9, 7), (0.0, 0.0)),))
    [(idx, crop)] = crop_cells(scan, layout)
    assert idx == 0 and crop == scan


def test_grid20_crops_known_fills():
    layout = grid20_layout(dpi=10)
    scan = np.zeros((80, 100))
    for c in layout.cells:
        x, y, w, h = c.px
        scan[y:y + h, x:x + w] = c.index / 20.0
    crops = crop_cells(Canvas(scan), layout)
    assert [i for i, _ in crops] == list(range(20))
    for i, crop in crops:
        assert crop.shape == (20, 20) and np.all(crop.pixels == i / 20.0)


def test_crop_out_of_bounds():
    with pytest.raises(LayoutError):
        crop_cells(Canvas.blank(50, 50), grid20_layout(dpi=10))


def test_layout_invariants():
    cells = grid20_layout(dpi=10).cells
    with pytest.raises(LayoutError):
        GridLayout("GRID14", cells)
    with pytest.raises(LayoutError):
        GridLayout("GRID20", cells[:-1] + (Cell(19, (0, 0, 5, 5), (0.0, 0.0)),))
    with pytest.raises(LayoutError):
        GridLayout("GRID7", cells)
    grid14 = GridLayout("GRID14", tuple(Cell(i, (10 * i, 0, 10, 10), (i, 0.0)) for i in range(14)))
    assert GridLayout.from_json(grid14.to_json()) == grid14
    with pytest.raises(FormatError):
        GridLayout.from_json('{"kind": "GRID20"}')


def test_grid20_geometry():
    layout = grid20_layout(dpi=100)
    assert len(layout.cells) == 20
    assert layout.cells[0].px == (0, 0, 200, 200)
    assert layout.cells[0].center_mm == pytest.approx((25.4, 3.5 * 50.8))
    assert layout.nearest_cell(*layout.cells[13].center_mm).index == 13
    for i, a in enumerate(layout.cells):
        for b in layout.cells[i + 1:]:
            assert not dataprep._overlap(a.px, b.px)


def test_white_cell_normalises_to_white():
    out = normalize_stroke_image(Canvas.blank(50, 40))
    assert out.shape == (32, 64, 1) and np.all(out == 1.0)
    dark = normalize_stroke_image(Canvas.blank(50, 40, 0.0))
    assert dark.shape == (32, 64, 1) and np.all(dark == 0.0)


def test_downsample_matches_block_mean():
    img = np.random.default_rng(1).random((64, 128))
    out = resize_bilinear(img, 32, 64)
    oracle = img.reshape(32, 2, 64, 2).mean(axis=(1, 3))
    assert np.max(np.abs(out - oracle)) <= 1e-6


def _bilinear_oracle(img, oh, ow):
    ih, iw = img.shape
    out = np.empty((oh, ow))
    for i in range(oh):
        for j in range(ow):
            sy = min(max((i + 0.5) * ih / oh - 0.5, 0.0), ih - 1)
            sx = min(max((j + 0.5) * iw / ow - 0.5, 0.0), iw - 1)
            y0, x0 = int(math.floor(sy)), int(math.floor(sx))
            y1, x1 = min(y0 + 1, ih - 1), min(x0 + 1, iw - 1)
            fy, fx = sy - y0, sx - x0
            out[i, j] = ((1 - fy) * ((1 - fx) * img[y0, x0] + fx * img[y0, x1])
                         + fy * ((1 - fx) * img[y1, x0] + fx * img[y1, x1]))
    return out


@pytest.mark.parametrize("shape", [(64, 128), (45, 70), (20, 20), (3, 200)])
def test_resize_matches_formula(shape):
    img = np.random.default_rng(2).random(shape)
    assert np.max(np.abs(resize_bilinear(img, 32, 64) - _bilinear_oracle(img, 32, 64))) <= 1e-6


def test_normalise_steps():
    px = np.full((64, 128), 0.8)
    px[20:40, 10:100] = 0.2
    px[0:8, 0:8] = 0.0  # printed index
    out = normalize_stroke_image(Canvas(px), (0, 0, 8, 8))[..., 0]
    assert out[0, 0] == 1.0                   # index blanked
    assert out[31, 63] == pytest.approx(1.0)  # blank sheet white-balanced to 1
    assert out[15, 20] == pytest.approx(0.25)  # 0.2 / 0.8


# --- markers ----------------------------------------------------------------------

def test_identity_triangle():
    f = derive_tip_pose(REF + 5.0)
    assert (f.x, f.y, f.z) == pytest.approx(tuple(REF.mean(axis=0) + 5.0))
    assert (f.yaw, f.pitch, f.roll) == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)


def test_quarter_turn_about_vertical():
    f = derive_tip_pose(REF @ rot_zyx(90, 0, 0).T)
    assert f.yaw == pytest.approx(90.0, abs=1e-9)
    assert f.pitch == pytest.approx(0.0, abs=1e-9) and f.roll == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(-179, 179), st.floats(-85, 85), st.floats(-179, 179),
       st.tuples(*[st.floats(-500, 500)] * 3), st.tuples(*[st.floats(-100, 100)] * 3))
def test_random_rigid_transform_recovered(yaw, pitch, roll, shift, offset):
    ref = np.array([[0.0, 0.0, 0.0], [60.0, 5.0, 0.0], [10.0, 40.0, 3.0]])
    cal = MarkerCalibration(offset=offset, reference=tuple(map(tuple, ref)))
    R = rot_zyx(yaw, pitch, roll)
    markers = (ref - ref.mean(axis=0)) @ R.T + np.array(shift)
    f = derive_tip_pose(markers, cal)
    tip = np.array(shift) + R @ np.array(offset)
    assert np.allclose((f.x, f.y, f.z), tip, atol=1e-6)
    assert np.allclose((f.yaw, f.pitch, f.roll), (yaw, pitch, roll), atol=1e-6)


def test_degenerate_markers():
    with pytest.raises(DegenerateRigidBodyError):
        derive_tip_pose([[0, 0, 0], [1, 1, 1], [2, 2, 2]])
    with pytest.raises(DegenerateRigidBodyError):
        MarkerCalibration(offset=(math.inf, 0.0, 0.0))


# --- segments ---------------------------------------------------------------------

def test_segment_examples():
    assert segment_by_z(frames_from_z([5, 6, 7])) == []
    [seg] = segment_by_z(frames_from_z([5, 1, 0, 1.5, 3]), 2.0)
    assert (seg.start, seg.stop) == (1, 4)
    assert seg.frames[:, 3].tolist() == [1, 0, 1.5]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), max_size=60), st.floats(-2, 2))
def test_segments_partition_below_cut(z, cut):
    frames = frames_from_z(z)
    segs = segment_by_z(frames, cut)
    covered = [i for s in segs for i in range(s.start, s.stop)]
    assert covered == [i for i, v in enumerate(z) if v < cut]
    assert all(a.stop < b.start for a, b in zip(segs, segs[1:]))
    for s in segs:
        assert np.array_equal(s.frames, frames[s.start:s.stop])


def test_center_segment():
    rng = np.random.default_rng(3)
    seg = Segment(rng.random((10, 7)), 4)
    assert np.array_equal(center_segment(seg, (0.0, 0.0)).frames, seg.frames)
    still = np.zeros((5, 7))
    still[:, 1:3] = (12.5, -3.0)
    assert np.all(center_segment(Segment(still), (12.5, -3.0)).frames[:, 1:3] == 0.0)
    c = (0.25, 0.5)  # exactly representable, so the shift undoes exactly
    moved = center_segment(seg, c)
    back = center_segment(moved, (-c[0], -c[1]))
    assert np.array_equal(back.frames, seg.frames) and back.start == 4
    with pytest.raises(InvalidSegmentError):
        center_segment(Segment(np.zeros((0, 7))), c)


def test_resample_examples():
    f = np.random.default_rng(4).random((60, 7))
    assert np.array_equal(resample_fixed(Segment(f)), f[:, 1:].T)
    f120 = np.random.default_rng(5).random((120, 7))
    got = resample_fixed(Segment(f120))
    idx = dataprep.resample_indices(120)
    assert idx[0] == 0 and idx[-1] == 119
    assert np.array_equal(got, f120[idx, 1:].T)
    one = np.arange(7.0)[None]
    assert np.array_equal(resample_fixed(Segment(one)), np.tile(one[0, 1:, None], (1, 60)))
    with pytest.raises(InvalidSegmentError):
        resample_fixed(Segment(np.zeros((0, 7))))


@given(st.integers(2, 2000))
def test_resample_keeps_endpoints(n):
    f = np.arange(n, dtype=float)[:, None] * np.ones(7)
    out = resample_fixed(Segment(f))
    assert out.shape == (6, 60)
    assert out[0, 0] == 0 and out[0, -1] == n - 1
    assert np.all(np.diff(out[0]) >= 0)


def test_quality_examples():
    assert quality_filter(Segment(np.zeros((5, 7))))[0] is False
    clean = np.zeros((80, 7))
    clean[:, 1] = np.linspace(0, 40, 80)
    assert quality_filter(Segment(clean)) == (True, "")
    glitch = clean.copy()
    glitch[40:, 2] += 200.0
    ok, why = quality_filter(Segment(glitch))
    assert not ok and "jump" in why
    nan = clean.copy()
    nan[3, 4] = np.nan
    assert quality_filter(Segment(nan))[0] is False
    assert quality_filter(Segment(np.zeros((5, 7))), QualityConfig(min_frames=3))[0]


# --- files and ingest ---------------------------------------------------------------

def _stream():
    t = np.arange(600) / 120.0
    f = np.zeros((600, 7))
    f[:, 0] = t
    f[:, 1] = 60.0 + 5 * t
    f[:, 2] = 80.0
    f[:, 3] = 4.0 * np.cos(2 * np.pi * t / 2.0)
    f[:, 4] = 30.0
    return f


def test_csv_round_trip_and_ingest_determinism(tmp_path):
    frames = _stream()
    dataprep.write_mocap_csv(tmp_path / "a.csv", frames)
    back = dataprep.read_mocap_csv(tmp_path / "a.csv")
    assert np.array_equal(back, frames)

    layout = grid20_layout()
    outs = []
    for k in range(2):
        kept, rejected = dataprep.ingest_stream(dataprep.read_mocap_csv(tmp_path / "a.csv"),
                                                layout, "s1")
        dataprep.write_motion_jsonl(tmp_path / f"m{k}.jsonl", kept)
        outs.append((tmp_path / f"m{k}.jsonl").read_bytes())
    assert outs[0] == outs[1]
    records = dataprep.read_motion_jsonl(tmp_path / "m0.jsonl")
    assert records and all(r.sample.shape == (6, 60) for r in records)
    cell = layout.cells[records[0].cell]
    assert records[0].sample[1, 0] == pytest.approx(80.0 - cell.center_mm[1])


def test_marker_csv(tmp_path):
    R = rot_zyx(30, 0, 0)
    rows = ["frame,time," + ",".join(f"m{i}{a}" for i in (1, 2, 3) for a in "xyz")]
    for i in range(3):
        m = REF @ R.T + [i, 0, 1]
        rows.append(f"{i},{i / 120}," + ",".join(repr(float(v)) for v in m.ravel()))
    (tmp_path / "m.csv").write_text("\n".join(rows) + "\n")
    frames = dataprep.read_mocap_csv(tmp_path / "m.csv")
    assert frames.shape == (3, 7)
    assert frames[:, 4] == pytest.approx([30.0] * 3)


@pytest.mark.parametrize("text", ["a,b\n1,2\n", "frame,time,x,y,z,yaw,pitch,roll\n0,1,0,0,0,0,0,0\n"
                                  "1,1,0,0,0,0,0,0\n", "frame,time,x,y,z,yaw,pitch,roll\n0,a,0,0,0,0,0,0\n"])
def test_bad_csv(tmp_path, text):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(FormatError):
        dataprep.read_mocap_csv(tmp_path / "bad.csv")


def test_motion_record_errors():
    with pytest.raises(FormatError):
        dataprep.MotionRecord.from_json('{"sheet": "a"}')
