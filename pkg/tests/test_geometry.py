import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from caplab.geometry import (
    Cell,
    CompactSet,
    GeometryError,
    cantor_interval_length,
    centers,
    from_json,
    make_cantor,
    make_disk,
    make_segment,
    node_arrays,
    refine,
    refine_to,
    to_json,
    union,
)


class TestMakeDisk:
    def test_single_central_cell(self):
        cs = make_disk((0, 0), 0.25, 0.25)
        assert len(cs) == 1
        c = cs.cells[0]
        assert (c.cx, c.cy) == (0.0, 0.0)
        assert c.contains(0.0, 0.0)

    def test_cell_count_matches_area(self):
        # area-count oracle: pi * (radius/side)^2 cells
        cs = make_disk((0, 0), 0.1, 0.1 / 64)
        expected = math.pi * 64**2
        assert abs(len(cs) - expected) / expected < 0.05

    def test_rejects_resolution_above_radius(self):
        with pytest.raises(GeometryError):
            make_disk((0, 0), 0.1, 0.2)

    @pytest.mark.parametrize("bad", [0.0, -0.1])
    def test_rejects_nonpositive_parameters(self, bad):
        with pytest.raises(GeometryError):
            make_disk((0, 0), bad, 0.01)
        with pytest.raises(GeometryError):
            make_disk((0, 0), 0.1, bad)

    def test_cells_disjoint_and_near_disk(self):
        cs = make_disk((0.05, -0.02), 0.08, 0.01)
        pts, diams = node_arrays(cs)
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        off = ~np.eye(len(pts), dtype=bool)
        assert d[off].min() >= 0.01 - 1e-12  # grid spacing
        r = np.sqrt(((pts - [0.05, -0.02]) ** 2).sum(1))
        assert r.max() < 0.08

    def test_target_flag_enforced(self):
        make_disk((0, 0), 0.2, 0.01, target=True)
        with pytest.raises(GeometryError):
            make_disk((0.3, 0), 0.1, 0.01, target=True)


class TestMakeCantor:
    def test_depth_zero_is_unit_segment(self):
        cs = make_cantor(0.75, 0)
        assert len(cs) == 1
        c = cs.cells[0]
        assert c.cx == 0.0 and c.cy == 0.0 and c.hy == 0.0
        assert 2 * c.hx == 1.0

    def test_depth_one_lengths_and_placement(self):
        cs = make_cantor(0.75, 1)
        ell = 2.0 ** -(2.0**0.75)
        assert len(cs) == 2
        for c in cs.cells:
            assert 2 * c.hx == pytest.approx(ell, rel=1e-14)
        # flush with the parent's endpoints
        assert cs.cells[0].cx == pytest.approx(-0.5 + ell / 2)
        assert cs.cells[1].cx == pytest.approx(0.5 - ell / 2)

    def test_depth_two_lengths(self):
        cs = make_cantor(0.75, 2)
        ell = 2.0 ** -(2.0**1.5)
        assert len(cs) == 4
        assert all(2 * c.hx == pytest.approx(ell, rel=1e-14) for c in cs.cells)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 0.2, 1.4])
    def test_rejects_alpha_outside_range(self, alpha):
        with pytest.raises(GeometryError):
            make_cantor(alpha, 1)

    def test_rejects_overlapping_children(self):
        # alpha barely above 1/2: level-2 children outgrow their parent
        with pytest.raises(GeometryError):
            make_cantor(0.51, 2)

    @given(st.integers(min_value=0, max_value=5))
    def test_nesting(self, n):
        parent = make_cantor(0.75, n)
        child = make_cantor(0.75, n + 1)
        for cc in child.cells:
            assert any(
                pc.cx - pc.hx - 1e-12 <= cc.cx - cc.hx
                and cc.cx + cc.hx <= pc.cx + pc.hx + 1e-12
                for pc in parent.cells
            )

    @given(st.integers(min_value=1, max_value=6))
    def test_total_length_formula(self, n):
        cs = make_cantor(0.75, n)
        expected = 2**n * cantor_interval_length(0.75, n)
        assert cs.total_measure() == pytest.approx(expected, rel=1e-12)

    def test_total_length_strictly_decreasing(self):
        lengths = [make_cantor(0.75, n).total_measure() for n in range(7)]
        assert all(a > b for a, b in zip(lengths, lengths[1:]))


class TestRefine:
    def test_square_splits_into_four(self):
        cs = CompactSet(cells=(Cell(0.0, 0.0, 0.1, 0.1),), label="sq")
        out = refine(cs, 2)
        assert len(out) == 4
        assert out.resolution == pytest.approx(cs.resolution / 2)

    def test_segment_splits_collinear(self):
        cs = CompactSet(cells=(Cell(0.0, 0.0, 0.15, 0.0),))
        out = refine(cs, 3)
        assert len(out) == 3
        assert all(c.cy == 0.0 and c.hy == 0.0 for c in out.cells)

    @given(st.integers(min_value=2, max_value=5))
    def test_measure_preserved(self, factor):
        cs = make_disk((0, 0), 0.05, 0.02)
        out = refine(cs, factor)
        assert out.total_measure() == pytest.approx(cs.total_measure(), rel=1e-12)

    def test_membership_agrees_with_parent(self):
        cs = make_disk((0, 0), 0.06, 0.015)
        out = refine(cs, 3)
        rng = np.random.default_rng(7)
        pts = rng.uniform(-0.08, 0.08, size=(10_000, 2))
        for x, y in pts:
            assert cs.contains(x, y) == out.contains(x, y)

    def test_rejects_factor_below_two(self):
        cs = make_disk((0, 0), 0.05, 0.02)
        with pytest.raises(GeometryError):
            refine(cs, 1)

    def test_refine_to_reaches_resolution(self):
        cs = make_cantor(0.75, 1)
        out = refine_to(cs, 0.01)
        assert out.resolution <= 0.01


class TestCenters:
    def test_cantor_level_one_positions(self):
        ell = 2.0 ** -(2.0**0.75)
        got = centers(make_cantor(0.75, 1))
        assert len(got) == 2
        assert got[0][0][0] == pytest.approx(-(0.5 - ell / 2))
        assert got[1][0][0] == pytest.approx(0.5 - ell / 2)

    def test_empty_set(self):
        assert centers(CompactSet(cells=())) == []

    def test_order_deterministic(self):
        a = make_disk((0, 0), 0.07, 0.01)
        b = make_disk((0, 0), 0.07, 0.01)
        assert centers(a) == centers(b)
        xs = [p for p, _ in centers(a)]
        assert xs == sorted(xs)


class TestSerialization:
    def test_round_trip_lossless(self):
        cs = make_cantor(0.75, 3)
        again = from_json(to_json(cs))
        assert again.label == cs.label
        assert again.resolution == cs.resolution
        for a, b in zip(again.cells, cs.cells):
            assert (a.cx, a.cy, a.hx, a.hy) == (b.cx, b.cy, b.hx, b.hy)

    def test_document_shape(self):
        doc = json.loads(to_json(make_disk((0, 0), 0.05, 0.02, label="d")))
        assert set(doc) == {"label", "resolution", "cells"}
        assert set(doc["cells"][0]) == {"cx", "cy", "hx", "hy"}

    def test_rejects_inconsistent_resolution(self):
        doc = json.loads(to_json(make_disk((0, 0), 0.05, 0.02)))
        doc["resolution"] = 999.0
        with pytest.raises(GeometryError):
            from_json(json.dumps(doc))


def test_union_concatenates_disjoint_sets():
    a = make_disk((0, 0), 0.05, 0.01)
    b = make_cantor(0.75, 2)
    u = union(a, b)
    assert len(u) == len(a) + len(b)


def test_cell_invariants():
    with pytest.raises(GeometryError):
        Cell(0, 0, 0.0, 0.1)
    with pytest.raises(GeometryError):
        Cell(0, 0, 0.1, -0.1)
    assert Cell(0, 0, 0.1, 0.0).diameter == pytest.approx(0.2)
