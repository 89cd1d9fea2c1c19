import json
from pathlib import Path

import pytest

from camcoord import harness
from camcoord.harness import ExperimentSpec, HeatmapParseError, main, parse_placement, read_heatmap_csv
from camcoord.plangen import UNCONSTRAINED, generate_plan_sets, plans_csv_text, read_plans_csv
from camcoord.scenario import load_scenario

ONE_CAMERA = {
    "label": "one",
    "map": {"width_m": 60, "height_m": 40, "cell_m": 10},
    "cameras": {"locations": [[30, 20]], "range_m": 25, "angle_deg": 45},
    "privacy": {"rectangles": [{"rows": [0, 1], "cols": [0, 2]}]},
    "plans": {"count": 4},
}


def write_doc(tmp_path, doc):
    path = tmp_path / "scn.json"
    path.write_text(json.dumps(doc))
    return str(path)


def quick(*extra):
    return ["--reps", "2", "--iters", "3", *extra]


class TestRun:
    def test_trivial_spec(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["run", "--scenario", write_doc(tmp_path, ONE_CAMERA), "--methods", "exhaustive",
                   "--out", str(out)])
        assert rc == 0
        lines = (out / "metrics.csv").read_text().splitlines()
        assert lines[0].split(",")[:4] == ["scenario", "method", "placement", "K"]
        assert len(lines) == 2 and lines[1].startswith("one,exhaustive,")
        heatmaps = list(out.rglob("heatmap.csv"))
        assert len(heatmaps) == 1
        assert len(heatmaps[0].read_text().splitlines()) == 1 + 24
        selection = (heatmaps[0].parent / "selection.csv").read_text().splitlines()
        assert selection[0] == "camera_id,plan_index,orientation_deg" and len(selection) == 2

    def test_deterministic(self, tmp_path):
        scn = write_doc(tmp_path, ONE_CAMERA)
        texts = []
        for name in ("a", "b"):
            assert main(["run", "--scenario", scn, "--methods", "iepos,ggv,hillclimb",
                         "--out", str(tmp_path / name), *quick()]) == 0
            texts.append((tmp_path / name / "metrics.csv").read_bytes())
            texts.append(next((tmp_path / name / "one" / "iepos").rglob("trace.csv")).read_bytes())
        assert texts[0] == texts[2] and texts[1] == texts[3]

    def test_workers_same_output(self, tmp_path):
        args = ["sweep-k", "--scenario", "squares4", "--placement", "2x2", "--k", "4,8",
                "--methods", "iepos,ggv", *quick()]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
        assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()

    def test_failing_point_partial_results(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["sweep-placement", "--scenario", "open", "--placement", "1x1,4x4", "--k", "8",
                   "--methods", "exhaustive", "--out", str(out)])
        assert rc == 1
        lines = (out / "metrics.csv").read_text().splitlines()
        assert len(lines) == 2 and ",1x1," in lines[1]
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["failures"]) == 1
        assert manifest["failures"][0]["placement"] == [4, 4]
        assert "BudgetExceededError" in manifest["failures"][0]["error"]

    def test_unknown_method(self, tmp_path, capsys):
        assert main(["run", "--methods", "magic", "--out", str(tmp_path)]) == 2
        assert "camcoord: error:" in capsys.readouterr().err

    def test_missing_scenario(self, tmp_path, capsys):
        assert main(["run", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
        assert "nope.json" in capsys.readouterr().err


class TestManifest:
    def spec(self, **kw):
        return ExperimentSpec(scenarios=[ONE_CAMERA], **kw)

    def test_hash_tracks_semantic_input(self):
        base = self.spec().config_hash()
        assert self.spec(out=Path("elsewhere"), workers=8).config_hash() == base
        assert self.spec(seed=1).config_hash() != base
        assert self.spec(methods=("ggv",)).config_hash() != base
        assert self.spec(k_values=(8,)).config_hash() != base
        other = json.loads(json.dumps(ONE_CAMERA))
        other["cameras"]["range_m"] = 26
        assert ExperimentSpec(scenarios=[other]).config_hash() != base

    def test_manifest_contents(self, tmp_path):
        spec = self.spec(methods=("ggv",), out=tmp_path)
        assert harness.cmd_run(spec) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config_hash"] == spec.config_hash()
        assert manifest["seed"] == 0 and manifest["failures"] == []
        assert set(manifest["versions"]) == {"camcoord", "numpy", "python", "kernels"}

    def test_rejects_empty_axes(self):
        with pytest.raises(ValueError):
            ExperimentSpec(scenarios=[])
        with pytest.raises(ValueError):
            self.spec(methods=())


class TestPlacementArg:
    def test_valid(self):
        assert parse_placement("10x7") == (10, 7)
        assert parse_placement("2X3") == (2, 3)

    @pytest.mark.parametrize("text", ["10", "axb", "0x3", "1x2x3", ""])
    def test_invalid(self, text):
        with pytest.raises(Exception):
            parse_placement(text)

    def test_point_scenario_keeps_base_range(self):
        base = load_scenario(harness.scenario_document("open"))
        pt = harness.point_scenario(harness.scenario_document("open"), 8, (6, 6), 30.0, None, None)
        assert pt.n_cameras == 36 and pt.plan_count == 8
        assert pt.cameras[0].range == base.cameras[0].range
        assert pt.cameras[0].angle == 30.0
        assert pt.privacy_threshold == base.privacy_threshold


class TestRender:
    def test_round_trip(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--scenario", write_doc(tmp_path, ONE_CAMERA), "--methods", "ggv",
                     "--out", str(out)]) == 0
        src = next(out.rglob("heatmap.csv"))
        dst = tmp_path / "h.pgm"
        assert main(["render", str(src), "--out", str(dst)]) == 0
        assert dst.read_text() == (src.parent / "heatmap.pgm").read_text()

    @pytest.mark.parametrize("text, where", [
        ("a,b\n", "line 1"),
        ("cell_index,row,col,label,diff\n0,0,0,match,0.0\n1,0,1,foo,0.0\n", "line 3"),
        ("cell_index,row,col,label,diff\n0,0,0,match\n", "line 2"),
        ("cell_index,row,col,label,diff\n0,x,0,match,0.0\n", "line 2"),
    ])
    def test_errors_name_the_line(self, text, where):
        with pytest.raises(HeatmapParseError) as exc:
            read_heatmap_csv(text)
        assert where in str(exc.value)

    def test_cli_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("cell_index,row,col,label,diff\n0,0,0,foo,0.0\n")
        assert main(["render", str(bad)]) == 2
        assert "line 2: unknown label 'foo'" in capsys.readouterr().err


class TestExportPlans:
    def test_reexport_identical(self, tmp_path):
        scn = write_doc(tmp_path, ONE_CAMERA)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["export-plans", "--scenario", scn, "--mode", UNCONSTRAINED, "--out", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()
        with open(a) as fh:
            back = read_plans_csv(fh, samples=4, mode=UNCONSTRAINED)
        sets = generate_plan_sets(load_scenario(ONE_CAMERA), UNCONSTRAINED)
        assert back == sets
        assert plans_csv_text(back) == a.read_text()
