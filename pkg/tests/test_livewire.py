import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lumbarfat import livewire, raster
from lumbarfat.errors import ValidationError

from oracles import enumerate_paths_min_cost, grid_min_cost, rasterize_bruteforce

SQRT2 = math.sqrt(2.0)


def assert_valid_path(path):
    assert len(path) == len(set(path)), "path repeats a pixel"
    for (x0, y0), (x1, y1) in zip(path, path[1:]):
        assert max(abs(x1 - x0), abs(y1 - y0)) == 1, "consecutive points must be 8-neighbors"


class TestEdgeCostMap:
    def test_constant_image_all_ones(self):
        costs = livewire.edge_cost_map(raster.GrayImage(np.full((5, 5), 90, dtype=np.uint8)))
        assert np.array_equal(costs, np.ones((5, 5)))

    def test_vertical_step_edge(self):
        arr = np.zeros((6, 6), dtype=np.uint8)
        arr[:, 3:] = 255
        costs = livewire.edge_cost_map(raster.GrayImage(arr))
        # both columns flanking the step carry the maximal gradient
        assert np.allclose(costs[1:-1, 2], 0.0)
        assert np.allclose(costs[1:-1, 3], 0.0)
        assert np.all(costs[:, 0] > 0.9)

    def test_single_bright_pixel_ring(self):
        arr = np.zeros((5, 5), dtype=np.uint8)
        arr[2, 2] = 255
        costs = livewire.edge_cost_map(raster.GrayImage(arr))
        # By hand: axial neighbors of the peak see |G| = 2*255 = 510 (the
        # image maximum), the peak itself has zero gradient, diagonal
        # neighbors see 255*sqrt(2).
        for x, y in ((1, 2), (3, 2), (2, 1), (2, 3)):
            assert costs[y, x] == 0.0
        assert costs[2, 2] == 1.0
        assert costs[1, 1] == pytest.approx(1.0 - SQRT2 / 2.0)

    def test_range_and_empty(self):
        rng = np.random.default_rng(5)
        arr = rng.integers(0, 256, size=(9, 9)).astype(np.uint8)
        costs = livewire.edge_cost_map(raster.GrayImage(arr))
        assert costs.min() >= 0.0 and costs.max() <= 1.0


class TestLowestCostPath:
    def test_single_point(self):
        costs = np.ones((4, 4))
        assert livewire.lowest_cost_path(costs, (2, 1), (2, 1)) == [(2, 1)]

    def test_uniform_grid_prefers_diagonal(self):
        costs = np.full((5, 5), 0.5)
        path = livewire.lowest_cost_path(costs, (0, 0), (4, 4))
        assert len(path) == 5
        assert_valid_path(path)
        got = livewire.path_cost(costs, path)
        assert got == enumerate_paths_min_cost(costs, (0, 0), (4, 4))

    def test_out_of_bounds_anchor(self):
        with pytest.raises(ValidationError):
            livewire.lowest_cost_path(np.ones((3, 3)), (0, 0), (5, 5))

    def test_curved_step_edge_is_followed(self):
        # Filled disc: the rim carries the strong gradient; the path between
        # two rim points must ride the low-cost band, not cut the interior.
        arr = np.zeros((24, 24), dtype=np.uint8)
        ys, xs = np.indices(arr.shape)
        arr[(xs - 4) ** 2 + (ys - 4) ** 2 <= 15 ** 2] = 255
        costs = livewire.edge_cost_map(raster.GrayImage(arr))
        band = {(x, y) for y in range(24) for x in range(24) if costs[y, x] <= 0.35}
        a, b = (19, 0), (0, 19)
        assert a in band and b in band
        path = livewire.lowest_cost_path(costs, a, b)
        assert_valid_path(path)
        assert set(path) <= band
        assert livewire.path_cost(costs, path) == grid_min_cost(costs, a, b)

    def test_matches_relaxation_oracle_on_random_grids(self, rng):
        for _ in range(8):
            h, w = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            costs = rng.uniform(0.001, 1.0, size=(h, w))
            frm = (int(rng.integers(0, w)), int(rng.integers(0, h)))
            to = (int(rng.integers(0, w)), int(rng.integers(0, h)))
            path = livewire.lowest_cost_path(costs, frm, to)
            assert_valid_path(path)
            assert livewire.path_cost(costs, path) == grid_min_cost(costs, frm, to)

    def test_matches_full_enumeration_on_tiny_grids(self, rng):
        for _ in range(3):
            costs = rng.uniform(0.05, 1.0, size=(3, 4))
            path = livewire.lowest_cost_path(costs, (0, 0), (3, 2))
            assert livewire.path_cost(costs, path) == enumerate_paths_min_cost(costs, (0, 0), (3, 2))

    def test_deterministic(self, rng):
        costs = rng.uniform(0.0, 1.0, size=(10, 10))
        p1 = livewire.lowest_cost_path(costs, (0, 5), (9, 3))
        p2 = livewire.lowest_cost_path(costs, (0, 5), (9, 3))
        assert p1 == p2

    def test_cost_tree_reuse_matches_fresh_path(self, rng):
        costs = rng.uniform(0.0, 1.0, size=(12, 12))
        tree = livewire.CostTree(costs, (2, 2), lazy=True)
        for target in [(11, 11), (0, 11), (7, 3)]:
            assert tree.path_to(target) == livewire.lowest_cost_path(costs, (2, 2), target)


class TestAppendAnchor:
    def test_same_point_unchanged(self):
        costs = np.ones((5, 5))
        path = [(0, 0), (1, 1), (2, 2)]
        assert livewire.append_anchor(path, costs, (2, 2)) == path

    def test_straight_edge_collinear_anchors(self):
        # Rows 2 and 3 flank the step with equal (zero) cost; the smaller-y
        # tie-break keeps the wire on row 2 when anchored there.
        arr = np.zeros((7, 9), dtype=np.uint8)
        arr[3:, :] = 255
        costs = livewire.edge_cost_map(raster.GrayImage(arr))
        first = livewire.lowest_cost_path(costs, (0, 2), (4, 2))
        extended = livewire.append_anchor(first, costs, (8, 2))
        assert extended == [(x, 2) for x in range(9)]

    def test_l_shape_consistent_with_segment_oracle(self):
        costs = np.full((6, 6), 0.25)
        p1 = livewire.lowest_cost_path(costs, (0, 0), (5, 0))
        p2 = livewire.append_anchor(p1, costs, (5, 5))
        assert_valid_path(p2)
        total = livewire.path_cost(costs, p2)
        assert total == pytest.approx(
            grid_min_cost(costs, (0, 0), (5, 0)) + grid_min_cost(costs, (5, 0), (5, 5))
        )

    def test_empty_contour_rejected(self):
        with pytest.raises(ValidationError):
            livewire.append_anchor([], np.ones((3, 3)), (0, 0))


class TestCloseAndRasterize:
    def test_square_interior_count(self):
        # 10x10 axis-aligned square: 100 even-odd inside pixels minus the 19
        # contour pixels classified inside leaves 81.
        costs = np.ones((12, 12))
        contour = square_contour(0, 0, 10)
        mask = livewire.close_and_rasterize(contour, costs, full_res_scale=1)
        assert mask.pixel_count == 81
        assert not mask.degenerate
        assert mask.contour[0] == mask.contour[-1]

    def test_collinear_contour_degenerate(self):
        costs = np.ones((6, 6))
        mask = livewire.close_and_rasterize([(0, 2), (1, 2), (2, 2), (3, 2)], costs, 1)
        assert mask.pixel_count == 0
        assert mask.degenerate

    def test_scale_doubles_coordinates(self):
        costs = np.ones((12, 12))
        contour = square_contour(1, 1, 4)
        m1 = livewire.close_and_rasterize(contour, costs, full_res_scale=1)
        m2 = livewire.close_and_rasterize(contour, costs, full_res_scale=2)
        assert [(2 * x, 2 * y) for x, y in m1.contour] == m2.contour

    def test_too_few_points_rejected(self):
        with pytest.raises(ValidationError):
            livewire.close_and_rasterize([(0, 0), (1, 1)], np.ones((3, 3)), 1)

    def test_interior_matches_bruteforce(self):
        costs = np.ones((16, 16))
        contour = [(2, 2), (12, 3), (13, 11), (6, 14), (1, 9)]
        mask = livewire.close_and_rasterize(contour, costs, 1)
        expected = rasterize_bruteforce(mask.contour, exclude=set(mask.contour))
        assert mask.interior_set() == expected


class TestMaskFromPolygon:
    def test_rectangle_interior(self):
        mask = livewire.mask_from_polygon([(0, 0), (165, 0), (165, 130), (0, 130)])
        assert mask.pixel_count == 164 * 129

    def test_min_vertices(self):
        with pytest.raises(ValidationError):
            livewire.mask_from_polygon([(0, 0), (5, 5)])

    @given(st.integers(0, 2**32 - 1), st.integers(3, 50))
    @settings(max_examples=40, deadline=None)
    def test_arbitrary_polygons_match_bruteforce(self, seed, n_vertices):
        rng = np.random.default_rng(seed)
        verts = [(int(rng.integers(0, 24)), int(rng.integers(0, 24))) for _ in range(n_vertices)]
        if len(set(verts)) < 3:
            return
        mask = livewire.mask_from_polygon(verts)
        closed = verts + [verts[0]]
        expected = rasterize_bruteforce(closed, exclude=set(mask.contour))
        assert mask.interior_set() == expected


def square_contour(x0, y0, side):
    pts = []
    pts += [(x0 + i, y0) for i in range(side)]
    pts += [(x0 + side, y0 + i) for i in range(side)]
    pts += [(x0 + side - i, y0 + side) for i in range(side)]
    pts += [(x0, y0 + side - i) for i in range(side)]
    return pts
