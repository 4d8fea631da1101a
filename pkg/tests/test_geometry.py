import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thinfilm.geometry import OrientedRect, Rect, clip_halfplane, intersect_convex, polygon_area, unit_direction

coords = st.floats(-5, 5, allow_nan=False)


def test_rect_half_open():
    r = Rect(0, 0, 3, 2)
    assert r.contains(np.array([[0, 0], [2.999, 1.5], [3, 0], [0, 2]])).tolist() == [True, True, False, False]
    assert r.area == 6
    assert r.boundary_distance(np.array([[1, 1]]))[0] == pytest.approx(1.0)


def test_rect_rejects_empty():
    with pytest.raises(ValueError):
        Rect(0, 0, 0, 1)


def test_clip_halfplane_square():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    half = clip_halfplane(sq, np.array([1.0, 0.0]), 0.5)
    assert polygon_area(half) == pytest.approx(0.5)
    assert len(clip_halfplane(sq, np.array([1.0, 0.0]), -1.0)) == 0


@given(coords, coords, st.floats(0.1, 4), st.floats(0.1, 4))
def test_intersect_convex_boxes(x, y, w, h):
    a = Rect(0, 0, 2, 2).polygon()
    b = Rect(x, y, x + w, y + h).polygon()
    ox = max(0.0, min(2, x + w) - max(0, x))
    oy = max(0.0, min(2, y + h) - max(0, y))
    assert polygon_area(intersect_convex(a, b)) == pytest.approx(ox * oy, abs=1e-9)


@pytest.mark.parametrize("nu", [(0, 1), (1, 1), (1, 2), (-3, 1)])
def test_oriented_cube(nu):
    Q = OrientedRect.cube(nu, 4.0, (1.0, -1.0))
    v, w = unit_direction(nu)
    assert abs(v @ w) < 1e-12
    assert Q.area == pytest.approx(16.0)
    assert polygon_area(Q.polygon()) == pytest.approx(16.0)
    assert Q.contains(np.array([[1.0, -1.0]]))[0]
    assert Q.boundary_distance(np.array([[1.0, -1.0]]))[0] == pytest.approx(2.0)
    box = Q.bounding_box()
    assert np.all(box.contains(Q.polygon() * 0.999 + 0.001 * np.array([1.0, -1.0])))
    assert math.isclose(np.linalg.norm(v), 1.0)
