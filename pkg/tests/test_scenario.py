import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from camcoord.errors import DomainError, ScenarioError
from camcoord.geometry import GridMap
from camcoord.scenario import (FIXTURES, PrivateRegion, TargetVector, build_target, default_range,
                               default_threshold, fixture_regions, grid_placement, load_scenario,
                               make_scenario)


def base_doc(**privacy):
    return {
        "label": "t",
        "map": {"width_m": 100, "height_m": 100, "cell_m": 10},
        "cameras": {"rows": 2, "cols": 2, "angle_deg": 45},
        "privacy": privacy,
    }


class TestBuildTarget:
    def test_no_regions(self):
        t, g = build_target(GridMap(30, 30, 10), [])
        assert t.values.tolist() == [1] * 9
        assert not g.private_mask.any()

    def test_whole_map(self):
        t, g = build_target(GridMap(30, 30, 10), [PrivateRegion(0, 3, 0, 3)])
        assert t.values.sum() == 0
        assert g.private_mask.all()

    def test_out_of_bounds(self):
        with pytest.raises(DomainError):
            build_target(GridMap(30, 30, 10), [PrivateRegion(0, 4, 0, 1)])

    def test_empty_region_rejected(self):
        with pytest.raises(DomainError):
            PrivateRegion(2, 2, 0, 1)

    def test_overlap_counted_once(self):
        obs = np.zeros(100, bool)
        obs[[0, 55, 99]] = True
        g = GridMap(100, 100, 10, obstacles=obs)
        regions = [PrivateRegion(4, 7, 4, 7), PrivateRegion(5, 8, 5, 8)]
        t, g2 = build_target(g, regions)
        private = np.zeros((10, 10), bool)
        private[4:7, 4:7] = private[5:8, 5:8] = True
        assert (1 - t.values).sum() == np.count_nonzero(private.reshape(-1) | obs)
        assert np.array_equal(g2.obstacles, obs)

    def test_target_values_checked(self):
        with pytest.raises(DomainError):
            TargetVector([0, 2])


class TestFixtures:
    def test_squares4_full_scale(self):
        regions = fixture_regions("squares4", 100, 100)
        t, _ = build_target(GridMap(1000, 1000, 10), regions)
        assert len(regions) == 4 and all(r.n_cells == 400 for r in regions)
        assert (t.values == 0).sum() == 1600

    def test_squares9_full_scale(self):
        regions = fixture_regions("squares9", 100, 100)
        t, _ = build_target(GridMap(1000, 1000, 10), regions)
        assert len(regions) == 9 and all(r.n_cells == 400 for r in regions)
        assert (t.values == 0).sum() == 3600

    def test_lanes2_full_scale(self):
        regions = fixture_regions("lanes2", 100, 100)
        assert [(r.row_stop - r.row_start, r.col_stop - r.col_start) for r in regions] == [(100, 15), (100, 15)]
        t, _ = build_target(GridMap(1000, 1000, 10), regions)
        assert (t.values == 0).sum() == 3000

    def test_desk_scale_layout(self):
        sq = fixture_regions("squares4", 40, 40)
        assert {(r.row_start, r.row_stop) for r in sq} == {(6, 14), (26, 34)}
        lanes = fixture_regions("lanes2", 40, 40)
        assert [(r.col_start, r.col_stop) for r in lanes] == [(10, 16), (24, 30)]

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(FIXTURES), st.integers(100, 400), st.integers(100, 400))
    def test_inside_map_for_large_grids(self, name, rows, cols):
        g = GridMap(cols, rows, 1)
        for r in fixture_regions(name, rows, cols):
            r.check_bounds(g)

    def test_regions_disjoint(self):
        for name in FIXTURES:
            regions = fixture_regions(name, 40, 40)
            total = sum(r.n_cells for r in regions)
            t, _ = build_target(GridMap(400, 400, 10), regions)
            assert (t.values == 0).sum() == total


class TestPlacement:
    def test_single(self):
        assert grid_placement(1, 1, GridMap(1000, 1000, 10)) == [(500, 500)]

    def test_ten_by_ten(self):
        locs = grid_placement(10, 10, GridMap(1000, 1000, 10))
        assert len(locs) == 100 and locs[0] == (50, 50) and locs[1] == (150, 50)

    def test_ten_by_seven(self):
        locs = grid_placement(10, 7, GridMap(1000, 1000, 10))
        assert len(locs) == 70
        assert locs[1][0] - locs[0][0] == pytest.approx(1000 / 7)

    def test_invalid(self):
        with pytest.raises(DomainError):
            grid_placement(0, 3, GridMap(10, 10, 10))


class TestDefaults:
    def test_range_full_scale(self):
        assert default_range(1e6, 100, 45.0) == pytest.approx(155.3773974, rel=1e-9)

    def test_range_tiles_area(self):
        r = default_range(160000.0, 16, 45.0)
        assert 16 * r * r * math.tan(math.radians(22.5)) == pytest.approx(160000.0)

    def test_threshold(self):
        assert default_threshold(10000.0, 100.0) == pytest.approx(5.0)

    def test_desk_scenario(self):
        s = make_scenario("squares4")
        assert (s.grid.rows, s.grid.cols, s.n_cameras) == (40, 40, 16)
        assert s.cameras[0].range == pytest.approx(155.3773974, rel=1e-9)
        assert s.privacy_threshold == pytest.approx(0.05 * s.cameras[0].area / 100.0)
        assert s.plan_count == 90 and s.samples == 4


class TestLoad:
    def test_fixture_expands(self):
        s = load_scenario(base_doc(fixture="lanes2"))
        assert s.grid.private_mask.sum() == 2 * 10 * round(0.15 * 10)

    def test_json_text(self):
        s = load_scenario(json.dumps(base_doc(fixture="squares4")))
        assert s.label == "t" and s.n_cameras == 4

    def test_round_trip(self):
        doc = base_doc(fixture="squares9", rectangles=[{"rows": [0, 1], "cols": [0, 2]}])
        doc["map"]["obstacles"] = [{"rows": [9, 10], "cols": [9, 10]}]
        s = load_scenario(doc)
        again = load_scenario(s.to_json())
        assert again == s
        assert load_scenario(again.to_json()) == s

    def test_explicit_locations(self):
        doc = base_doc()
        doc["cameras"] = {"locations": [[5, 5], [95, 95]], "range_m": 30}
        s = load_scenario(doc)
        assert [c.location for c in s.cameras] == [(5, 5), (95, 95)]
        assert s.placement is None

    @pytest.mark.parametrize("mutate, path", [
        (lambda d: d["cameras"].update(locations=[]), "cameras"),
        (lambda d: d["map"].pop("cell_m"), "map.cell_m"),
        (lambda d: d["map"].update(width_m=105), "map"),
        (lambda d: d["privacy"].update(fixture="triangles"), "privacy.fixture"),
        (lambda d: d["privacy"].update(rectangles=[{"rows": [0, 11], "cols": [0, 1]}]), "privacy.rectangles[0]"),
        (lambda d: d["cameras"].update(rows=0), "cameras.rows"),
        (lambda d: d["cameras"].update(angle_deg=200), "cameras.angle_deg"),
        (lambda d: d["cameras"].update(locations=[[500, 5]]), "cameras.locations[0]"),
        (lambda d: d.update(sampling={"density": 0}), "sampling.density"),
        (lambda d: d["map"].update(width_m="wide"), "map.width_m"),
    ])
    def test_errors_carry_field_path(self, mutate, path):
        doc = base_doc()
        mutate(doc)
        with pytest.raises(ScenarioError) as exc:
            load_scenario(doc)
        assert exc.value.path == path

    def test_invalid_json(self):
        with pytest.raises(ScenarioError):
            load_scenario("{not json")

    def test_everything_private(self):
        doc = base_doc(rectangles=[{"rows": [0, 10], "cols": [0, 10]}])
        with pytest.raises(ScenarioError):
            load_scenario(doc)
