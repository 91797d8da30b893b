import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from robopaint.errors import DegenerateTangentError, FormatError, InvalidParameterError
from robopaint.stroke import (MAX_RADIUS, Stroke, dumps_jsonl, eval_point, eval_radius,
                              eval_tangent, is_restricted, loads_jsonl, read_strokes,
                              restrict_control, unrestrict_control, write_strokes)

unit = st.floats(0.0, 1.0, allow_nan=False)
radius = st.floats(1e-4, MAX_RADIUS, allow_nan=False)
strokes = st.builds(Stroke, unit, unit, unit, unit, unit, unit, radius, radius, unit)
params = st.floats(0.0, 1.0, allow_nan=False)


def arch(rho_x1=0.5, rho_y1=1.0):
    return Stroke(0.0, 0.0, rho_x1, rho_y1, 1.0, 0.0, 0.1, 0.2, 0.5)


@pytest.mark.parametrize("rho, want", [(0.0, (0.5, 1.0)), (1.0, (0.5, 0.0)), (0.5, (0.5, 0.5))])
def test_restrict_examples(rho, want):
    assert restrict_control(arch(), rho).p1 == want


def test_eval_point_examples():
    s = Stroke(0.0, 0.0, 0.5, 0.5, 1.0, 0.0, 0.1, 0.2, 0.5)
    assert eval_point(s, 0.0) == (0.0, 0.0)
    assert eval_point(s, 1.0) == (1.0, 0.0)
    assert eval_point(s, 0.5) == pytest.approx((0.5, 0.25), abs=1e-15)


def test_eval_radius_examples():
    s = arch()
    assert eval_radius(s, 0.0) == 0.1
    assert eval_radius(s, 1.0) == 0.2
    assert eval_radius(s, 0.5) == pytest.approx(0.15, abs=1e-15)


def test_eval_tangent_examples():
    straight = Stroke(0.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.1, 0.1, 0.0)
    for t in (0.0, 0.3, 1.0):
        assert eval_tangent(straight, t) == pytest.approx((1.0, 0.0), abs=1e-12)
    bent = Stroke(0.0, 0.0, 0.0, 0.5, 1.0, 0.5, 0.1, 0.1, 0.0)
    assert eval_tangent(bent, 0.0) == pytest.approx((0.0, 1.0), abs=1e-12)
    with pytest.raises(DegenerateTangentError):
        eval_tangent(Stroke(0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.1, 0.1, 0.0), 0.5)


@pytest.mark.parametrize("field, value", [("x0", 1.5), ("y2", -0.1), ("r0", 0.0),
                                          ("r1", 0.3), ("g", 2.0), ("x1", math.nan)])
def test_invalid_strokes_rejected(field, value):
    kw = arch().to_dict()
    kw[field] = value
    with pytest.raises(InvalidParameterError):
        Stroke(**kw)


def test_bad_rho_and_t():
    with pytest.raises(InvalidParameterError):
        restrict_control(arch(), 1.5)
    with pytest.raises(InvalidParameterError):
        eval_point(arch(), -0.1)


@given(strokes)
def test_restrict_identity_and_idempotence(s):
    assert restrict_control(s, 0.0) == s
    once = restrict_control(s, 1.0)
    assert restrict_control(once, 1.0) == once


@given(strokes, params)
def test_restrict_stays_in_control_box(s, rho):
    r = restrict_control(s, rho)
    pts = s.control_points()
    assert pts[:, 0].min() <= r.x1 <= pts[:, 0].max()
    assert pts[:, 1].min() <= r.y1 <= pts[:, 1].max()
    assert is_restricted(r, rho)


@given(strokes, st.floats(0.0, 0.99))
def test_unrestrict_inverts_restrict(s, rho):
    r = restrict_control(s, rho)
    back = unrestrict_control(r, rho)
    assert back.x1 == pytest.approx(s.x1, abs=1e-9)
    assert back.y1 == pytest.approx(s.y1, abs=1e-9)


def test_unrestricted_point_is_not_restricted():
    # a middle point at the square corner cannot come from pulling toward (0.5, 0)
    assert not is_restricted(Stroke(0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.1, 0.1, 0.0), 0.5)


@given(strokes)
def test_endpoints_interpolated_exactly(s):
    assert eval_point(s, 0.0) == s.p0
    assert eval_point(s, 1.0) == s.p2


@given(strokes, params)
def test_radius_between_end_radii(s, t):
    r = eval_radius(s, t)
    assert min(s.r0, s.r1) <= r <= max(s.r0, s.r1)


@given(strokes, params)
def test_tangent_is_unit(s, t):
    try:
        tx, ty = eval_tangent(s, t)
    except DegenerateTangentError:
        return
    assert math.hypot(tx, ty) == pytest.approx(1.0, abs=1e-9)


@given(st.lists(strokes, max_size=5))
def test_jsonl_round_trip(seq):
    assert loads_jsonl(dumps_jsonl(seq)) == seq


def test_jsonl_file_and_errors(tmp_path):
    seq = [arch(), restrict_control(arch())]
    write_strokes(tmp_path / "s.jsonl", seq)
    assert read_strokes(tmp_path / "s.jsonl") == seq
    first = (tmp_path / "s.jsonl").read_text().splitlines()[0]
    assert first.startswith('{"x0": 0.0, "y0": 0.0, "x1": 0.5')
    with pytest.raises(FormatError):
        loads_jsonl('{"x0": 1}\n')
    with pytest.raises(FormatError):
        loads_jsonl("not json\n")


def test_array_round_trip():
    s = arch()
    assert Stroke.from_array(s.as_array()) == s
    assert np.array_equal(s.control_points(), [[0, 0], [0.5, 1.0], [1, 0]])
