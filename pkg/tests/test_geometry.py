import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lilyseg import (
    IdenticalGerms,
    MarkedPoint,
    NegativeRadius,
    PairKind,
    fold_direction,
    pair_geometry,
    realize_segment,
    relative_interiors_intersect,
    segments_touch,
)
from lilyseg.geometry import PairTable

HALF_PI = math.pi / 2


def mp(x, y, theta):
    return MarkedPoint(x, y, theta)


class TestPairGeometry:
    def test_axis_aligned_transversal(self):
        pg = pair_geometry(mp(0, 0, 0.0), mp(3, 4, HALF_PI))
        assert pg.kind is PairKind.TRANSVERSAL
        assert pg.d_ab == pytest.approx(3.0, rel=1e-12)
        assert pg.d_ba == pytest.approx(4.0, rel=1e-12)
        assert pg.m == pytest.approx(4.0, rel=1e-12)
        assert pg.intersection == pytest.approx((3.0, 0.0), abs=1e-12)

    def test_disjoint_parallel(self):
        pg = pair_geometry(mp(0, 0, 0.0), mp(0, 1, 0.0))
        assert pg.kind is PairKind.DISJOINT_PARALLEL
        assert pg.d_ab == math.inf and pg.d_ba == math.inf
        assert pg.intersection is None

    def test_collinear_midpoint_rule(self):
        pg = pair_geometry(mp(0, 0, 0.0), mp(2, 0, 0.0))
        assert pg.kind is PairKind.COLLINEAR_PARALLEL
        assert pg.d_ab == 1.0 == pg.d_ba
        assert pg.intersection == (1.0, 0.0)

    def test_identical_germs_raise(self):
        with pytest.raises(IdenticalGerms):
            pair_geometry(mp(1, 2, 0.0), mp(1, 2, 1.0))

    def test_near_parallel_treated_as_parallel(self):
        pg = pair_geometry(mp(0, 0, 0.1), mp(5, 5, 0.1 + 1e-13))
        assert pg.kind is PairKind.DISJOINT_PARALLEL


coords = st.floats(min_value=-100.0, max_value=100.0)
angles = st.floats(min_value=0.0, max_value=math.pi, exclude_max=True)


@st.composite
def marked_points(draw):
    return MarkedPoint(draw(coords), draw(coords), draw(angles))


@given(marked_points(), marked_points())
@settings(max_examples=200)
def test_swap_symmetry_exact(a, b):
    if (a.x, a.y) == (b.x, b.y):
        return
    ab = pair_geometry(a, b)
    ba = pair_geometry(b, a)
    assert ab.kind is ba.kind
    assert ba.d_ab == ab.d_ba and ba.d_ba == ab.d_ab
    assert ba.m == ab.m
    assert ba.intersection == ab.intersection


@given(marked_points(), marked_points())
@settings(max_examples=200)
def test_transversal_triangle_bound(a, b):
    if (a.x, a.y) == (b.x, b.y):
        return
    pg = pair_geometry(a, b)
    if pg.kind is PairKind.TRANSVERSAL:
        germ_dist = math.hypot(a.x - b.x, a.y - b.y)
        assert 2.0 * pg.m >= germ_dist * (1.0 - 1e-9)


@given(marked_points(), marked_points())
@settings(max_examples=100)
def test_table_matches_scalar_bitwise(a, b):
    if (a.x, a.y) == (b.x, b.y):
        return
    pg = pair_geometry(a, b)
    table = PairTable((a, b))
    assert table.d[0, 1] == pg.d_ab
    assert table.d[1, 0] == pg.d_ba


class TestRealizeSegment:
    def test_axis_aligned(self):
        seg = realize_segment(mp(0, 0, 0.0), 2.0)
        (x1, y1), (x2, y2) = seg.endpoints
        assert (x1, y1) == pytest.approx((-2.0, 0.0), abs=1e-12)
        assert (x2, y2) == pytest.approx((2.0, 0.0), abs=1e-12)

    def test_vertical(self):
        seg = realize_segment(mp(3, 4, HALF_PI), 4.0)
        (x1, y1), (x2, y2) = seg.endpoints
        assert (x1, y1) == pytest.approx((3.0, 0.0), abs=1e-12)
        assert (x2, y2) == pytest.approx((3.0, 8.0), abs=1e-12)

    def test_infinite_has_no_endpoints(self):
        seg = realize_segment(mp(0, 0, 0.0), math.inf)
        assert seg.endpoints is None

    def test_negative_radius_rejected(self):
        with pytest.raises(NegativeRadius):
            realize_segment(mp(0, 0, 0.0), -0.5)

    @given(marked_points(), st.floats(min_value=0.001, max_value=50.0))
    @settings(max_examples=100)
    def test_germ_is_midpoint_of_endpoints(self, point, radius):
        seg = realize_segment(point, radius)
        (x1, y1), (x2, y2) = seg.endpoints
        assert (x1 + x2) / 2 == pytest.approx(point.x, abs=1e-9)
        assert (y1 + y2) / 2 == pytest.approx(point.y, abs=1e-9)


class TestContactPredicates:
    def test_f2_solution_touch_but_not_interior(self):
        # Solved Model 1 system on the two-point fixture: the finite vertical
        # segment ends exactly on the infinite horizontal line.
        s_inf = realize_segment(mp(0, 0, 0.0), math.inf)
        s_fin = realize_segment(mp(3, 4, HALF_PI), 4.0)
        assert segments_touch(s_inf, s_fin)
        assert not relative_interiors_intersect(s_inf, s_fin)

    def test_crossing_interiors(self):
        s1 = realize_segment(mp(0, 0, 0.0), 5.0)
        s2 = realize_segment(mp(3, 4, HALF_PI), 5.0)
        assert relative_interiors_intersect(s1, s2)
        assert segments_touch(s1, s2)

    def test_parallel_disjoint_lines(self):
        s1 = realize_segment(mp(0, 0, 0.0), math.inf)
        s2 = realize_segment(mp(0, 1, 0.0), math.inf)
        assert not relative_interiors_intersect(s1, s2)
        assert not segments_touch(s1, s2)

    def test_far_apart_segments(self):
        s1 = realize_segment(mp(0, 0, 0.0), 1.0)
        s2 = realize_segment(mp(10, 10, HALF_PI), 1.0)
        assert not segments_touch(s1, s2)

    def test_f3_model1_p0_p2_do_not_touch(self):
        # Carrier intersection at (6, 0) is beyond the first segment's span.
        s0 = realize_segment(mp(0, 0, 0.0), 4.0)
        s2 = realize_segment(mp(9, 3, math.pi / 4), 5 * math.sqrt(2))
        assert not segments_touch(s0, s2)

    @given(marked_points(), st.floats(min_value=0.01, max_value=50.0))
    @settings(max_examples=50)
    def test_self_interior_overlap(self, point, radius):
        seg = realize_segment(point, radius)
        assert relative_interiors_intersect(seg, seg)

    def test_collinear_touching_end_to_end(self):
        s1 = realize_segment(mp(0, 0, 0.0), 1.0)
        s2 = realize_segment(mp(2, 0, 0.0), 1.0)
        assert segments_touch(s1, s2)
        assert not relative_interiors_intersect(s1, s2)


def test_fold_direction():
    assert fold_direction(math.pi) == 0.0
    assert fold_direction(-HALF_PI) == pytest.approx(HALF_PI)
    assert 0.0 <= fold_direction(17.3) < math.pi


def test_marked_point_validation():
    with pytest.raises(ValueError):
        MarkedPoint(0.0, 0.0, math.pi)
    with pytest.raises(ValueError):
        MarkedPoint(math.inf, 0.0, 0.0)
    with pytest.raises(ValueError):
        MarkedPoint(0.0, 0.0, -0.1)
