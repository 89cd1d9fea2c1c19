"""Command-line experiment driver.

Subcommands::

    camcoord run              --scenario squares4 --methods iepos,iepos-hc,ggv-private
    camcoord sweep-k          --scenario open --k 10,20,45,90,180 --placement 2x2,4x4,6x6
    camcoord sweep-placement  --scenario open --placement 2x2,4x4,6x6
    camcoord compare          --placement 4x4          # every privacy fixture
    camcoord export-plans     --scenario squares4 --out plans.csv
    camcoord render           heatmap.csv --out heatmap.pgm

Results land in ``<out>/<scenario>/<method>/<placement>_k<K>/`` plus a
combined ``<out>/metrics.csv`` and ``<out>/manifest.json``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, _kernels, baselines, coordination, evaluation
from .plangen import HARD, UNCONSTRAINED, generate_plan_sets, write_plans_csv
from .scenario import FIXTURES, Scenario, load_scenario, make_scenario

log = logging.getLogger("camcoord")

METHODS = ("iepos", "iepos-hc", "ggv", "ggv-private", "greedy", "hillclimb", "exhaustive")
DEFAULT_METHODS = ("iepos", "iepos-hc", "ggv", "ggv-private")
SWEEP_K = (10, 20, 45, 90, 180)
SWEEP_PLACEMENTS = ((2, 2), (4, 4), (6, 6))


@dataclass
class ExperimentSpec:
    scenarios: list[dict]
    methods: tuple[str, ...] = DEFAULT_METHODS
    k_values: tuple[Optional[int], ...] = (None,)
    placements: tuple[Optional[tuple[int, int]], ...] = (None,)
    angles: tuple[Optional[float], ...] = (None,)
    repetitions: int = 40
    iterations: int = 40
    seed: int = 0
    out: Path = Path("out")
    workers: int = 1
    threshold_v: Optional[float] = None
    samples: Optional[int] = None
    mean_price: float = 1.0
    standard_angle: float = 45.0
    hillclimb_restarts: int = 20
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        if not self.scenarios or not self.k_values or not self.placements:
            raise ValueError("sweep axes must be non-empty")

    def semantic(self) -> dict:
        return {
            "scenarios": self.scenarios, "methods": list(self.methods),
            "k_values": list(self.k_values),
            "placements": [list(p) if p else None for p in self.placements],
            "angles": list(self.angles), "repetitions": self.repetitions,
            "iterations": self.iterations, "seed": self.seed,
            "threshold_v": self.threshold_v, "samples": self.samples,
            "mean_price": self.mean_price, "standard_angle": self.standard_angle,
            "hillclimb_restarts": self.hillclimb_restarts,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_placement(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        rows, cols = int(r), int(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"placement must look like RxC, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError("placement rows and cols must be >= 1")
    return rows, cols


def scenario_document(ref: str) -> dict:
    """JSON document for a scenario file path or a fixture name."""
    if ref in FIXTURES:
        doc = make_scenario(ref).to_dict()
        doc["label"] = ref
        return doc
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"no scenario file or fixture named {ref!r}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    load_scenario(doc)
    return doc


def point_scenario(doc: dict, K: Optional[int], placement: Optional[tuple[int, int]],
                   angle: Optional[float], threshold_v: Optional[float],
                   samples: Optional[int]) -> Scenario:
    """Apply sweep overrides to a base document.

    The camera range is resolved on the base document and then held
    fixed, so placement sweeps change density with the same hardware.
    """
    base = load_scenario(doc)
    d = json.loads(json.dumps(doc))
    d["cameras"]["range_m"] = base.cameras[0].range
    if placement is not None:
        d["cameras"].pop("locations", None)
        d["cameras"]["rows"], d["cameras"]["cols"] = placement
    if angle is not None:
        d["cameras"]["angle_deg"] = angle
    if K is not None:
        d.setdefault("plans", {})["count"] = K
    if threshold_v is not None:
        d.setdefault("privacy", {})["threshold_v"] = threshold_v
    else:
        d.setdefault("privacy", {})["threshold_v"] = base.privacy_threshold
    if samples is not None:
        d.setdefault("sampling", {})["density"] = samples
    return load_scenario(d)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def metrics_row(report: evaluation.MetricsReport, placement: str, K: int) -> list[str]:
    return [report.scenario, report.method, placement, str(K),
            _fmt(report.coverage_inefficiency), _fmt(report.privacy_violation_rate),
            _fmt(report.total_coverage_ratio), _fmt(report.cameras_violation_rate),
            _fmt(report.interpolated_total_cost)]


def run_point(spec: ExperimentSpec, doc: dict, K, placement, angle) -> tuple[list[list[str]], dict]:
    """Run every method at one sweep point and write its artifacts."""
    scn = point_scenario(doc, K, placement, angle, spec.threshold_v, spec.samples)
    K = scn.plan_count
    plans: dict[str, list] = {}

    def plan_sets(mode):
        if mode not in plans:
            plans[mode] = generate_plan_sets(scn, mode)
        return plans[mode]

    rows = []
    timings = {}
    point_dir = f"{scn.placement_label}_k{K}"
    for method in spec.methods:
        t0 = time.perf_counter()
        trace_text = None
        if method in ("iepos", "iepos-hc"):
            ps = plan_sets(HARD if method == "iepos-hc" else UNCONSTRAINED)
            strict = scn.grid.private_mask if method == "iepos-hc" and scn.privacy_threshold == 0 else None
            res = coordination.run(ps, scn.target, spec.repetitions, spec.iterations, spec.seed,
                                   private_mask=strict)
            choices = res.selections
            buf = _StringBuf()
            coordination.write_trace_csv(res, buf)
            trace_text = buf.text
        else:
            ps = plan_sets(UNCONSTRAINED)
            if method == "ggv":
                choices = baselines.ggv_select(scn, ps, privacy_aware=False).choices
            elif method == "ggv-private":
                choices = baselines.ggv_select(scn, ps, privacy_aware=True).choices
            elif method == "greedy":
                choices = baselines.greedy_raster_select(scn, ps).choices
            elif method == "hillclimb":
                choices = baselines.hillclimb_select(scn, ps, spec.hillclimb_restarts, spec.seed).choices
            else:
                choices = baselines.exhaustive_select(scn, ps).choices
        timings[method] = time.perf_counter() - t0
        report = evaluation.evaluate(choices, ps, scn.grid, scn.target, method=method,
                                     scenario=scn.label, mean_price=spec.mean_price,
                                     required_angle=scn.cameras[0].angle,
                                     standard_angle=spec.standard_angle)
        rows.append(metrics_row(report, scn.placement_label, K))

        G = evaluation.aggregate(choices, ps, scn.grid.n_cells)
        labels, diff = evaluation.overlap_loss_heatmap(G, scn.target)
        d = spec.out / scn.label / method / point_dir
        _atomic_write(d / "heatmap.csv", evaluation.heatmap_csv(labels, diff, scn.grid.rows, scn.grid.cols))
        _atomic_write(d / "heatmap.pgm", evaluation.heatmap_pgm(labels, scn.grid.rows, scn.grid.cols))
        sel_lines = ["camera_id,plan_index,orientation_deg"]
        for p, k in zip(ps, choices):
            plan = p.plans[k]
            sel_lines.append(f"{p.camera_id},{plan.plan_index},{plan.orientation!r}")
        _atomic_write(d / "selection.csv", "\n".join(sel_lines) + "\n")
        if trace_text is not None:
            _atomic_write(d / "trace.csv", trace_text)
        _atomic_write(d / "metrics.csv", ",".join(evaluation.METRICS_HEADER) + "\n"
                      + ",".join(rows[-1]) + "\n")
    return rows, timings


class _StringBuf:
    def __init__(self):
        self.parts = []

    def write(self, s):
        self.parts.append(s)

    @property
    def text(self):
        return "".join(self.parts)


def sweep_points(spec: ExperimentSpec):
    angles = spec.angles if len(spec.angles) == len(spec.placements) else None
    for doc in spec.scenarios:
        for i, placement in enumerate(spec.placements):
            angle = angles[i] if angles else (spec.angles[0] if len(spec.angles) == 1 else None)
            for K in spec.k_values:
                yield doc, K, placement, angle


def _point_job(args):
    spec, doc, K, placement, angle = args
    try:
        rows, timings = run_point(spec, doc, K, placement, angle)
        return rows, timings, None
    except Exception as exc:  # reported per sweep point, the sweep continues
        return [], {}, f"{type(exc).__name__}: {exc}"


def cmd_run(spec: ExperimentSpec) -> int:
    spec.out.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, doc, K, pl, ang) for doc, K, pl, ang in sweep_points(spec)]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_point_job, jobs))
    else:
        results = [_point_job(j) for j in jobs]

    all_rows = []
    failures = []
    timings = []
    for (spec_, doc, K, pl, ang), (rows, tim, err) in zip(jobs, results):
        point = {"scenario": doc.get("label"), "K": K, "placement": list(pl) if pl else None,
                 "angle": ang}
        if err:
            log.error("sweep point %s failed: %s", point, err)
            failures.append({**point, "error": err})
        all_rows.extend(rows)
        timings.append({**point, "seconds": {m: round(t, 3) for m, t in tim.items()}})

    text = ",".join(evaluation.METRICS_HEADER) + "\n" + "".join(",".join(r) + "\n" for r in all_rows)
    _atomic_write(spec.out / "metrics.csv", text)
    manifest = {
        "config_hash": spec.config_hash(),
        "config": spec.semantic(),
        "seed": spec.seed,
        "versions": {"camcoord": __version__, "numpy": np.__version__,
                     "python": platform.python_version(), "kernels": _kernels.BACKEND},
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "timings": timings,
        "failures": failures,
    }
    _atomic_write(spec.out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return 1 if failures else 0


def cmd_export_plans(doc: dict, out: Path, mode: str, K=None, placement=None,
                     threshold_v=None, samples=None) -> int:
    scn = point_scenario(doc, K, placement, None, threshold_v, samples)
    sets = generate_plan_sets(scn, mode)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        n = write_plans_csv(sets, fh)
    log.info("wrote %d rows to %s", n, out)
    return 0


class HeatmapParseError(ValueError):
    pass


def read_heatmap_csv(text: str) -> tuple[np.ndarray, int, int]:
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header != ["cell_index", "row", "col", "label", "diff"]:
        raise HeatmapParseError(f"line 1: unexpected header {header!r}")
    codes = {"loss": evaluation.LOSS, "match": evaluation.MATCH, "overlap": evaluation.OVERLAP}
    cells = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise HeatmapParseError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            n, r, c = int(row[0]), int(row[1]), int(row[2])
            float(row[4])
        except ValueError:
            raise HeatmapParseError(f"line {lineno}: non-numeric field") from None
        if row[3] not in codes:
            raise HeatmapParseError(f"line {lineno}: unknown label {row[3]!r}")
        cells.append((n, r, c, codes[row[3]]))
    if not cells:
        raise HeatmapParseError("line 2: no cells")
    rows = max(c[1] for c in cells) + 1
    cols = max(c[2] for c in cells) + 1
    if len(cells) != rows * cols:
        raise HeatmapParseError(f"expected {rows * cols} cells, got {len(cells)}")
    labels = np.zeros(rows * cols, dtype=np.int8)
    for n, r, c, code in cells:
        if n != r * cols + c:
            raise HeatmapParseError(f"cell {n}: index does not match row {r}, col {c}")
        labels[n] = code
    return labels, rows, cols


def cmd_render(src: Path, out: Path) -> int:
    labels, rows, cols = read_heatmap_csv(src.read_text(encoding="utf-8"))
    _atomic_write(out, evaluation.heatmap_pgm(labels, rows, cols))
    return 0


def _csv_list(conv):
    def parse(text):
        return tuple(conv(t) for t in text.split(",") if t)
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="camcoord", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(name, help_text, default_k=(None,), default_pl=(None,)):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--scenario", default="open",
                        help="scenario JSON file or fixture name (%s)" % ", ".join(FIXTURES))
        sp.add_argument("--methods", type=_csv_list(str), default=DEFAULT_METHODS)
        sp.add_argument("--k", type=_csv_list(int), default=default_k)
        sp.add_argument("--placement", type=_csv_list(parse_placement), default=default_pl)
        sp.add_argument("--angle", type=_csv_list(float), default=(None,),
                        help="view angle(s) in degrees; one per placement or a single value")
        sp.add_argument("--reps", type=int, default=40)
        sp.add_argument("--iters", type=int, default=40)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--v", type=float, default=None, help="privacy threshold V")
        sp.add_argument("--sample-density", type=int, default=None)
        sp.add_argument("--price", type=float, default=1.0, help="mean standard-camera price")
        sp.add_argument("--standard-angle", type=float, default=45.0)
        return sp

    experiment("run", "run methods on one scenario")
    experiment("sweep-k", "sweep the number of plans", default_k=SWEEP_K)
    experiment("sweep-placement", "sweep camera lattices", default_pl=SWEEP_PLACEMENTS)
    cmp_ = experiment("compare", "run every privacy fixture")
    cmp_.set_defaults(methods=("iepos", "iepos-hc", "ggv", "ggv-private"))

    ex = sub.add_parser("export-plans", help="write the generated plan dataset as CSV")
    ex.add_argument("--scenario", default="open")
    ex.add_argument("--out", type=Path, default=Path("plans.csv"))
    ex.add_argument("--mode", choices=(UNCONSTRAINED, HARD), default=HARD)
    ex.add_argument("--k", type=int, default=None)
    ex.add_argument("--placement", type=parse_placement, default=None)
    ex.add_argument("--v", type=float, default=None)
    ex.add_argument("--sample-density", type=int, default=None)

    rd = sub.add_parser("render", help="render a heatmap CSV as PGM")
    rd.add_argument("heatmap", type=Path)
    rd.add_argument("--out", type=Path, default=None)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "render":
            out = args.out or args.heatmap.with_suffix(".pgm")
            return cmd_render(args.heatmap, out)
        if args.command == "export-plans":
            return cmd_export_plans(scenario_document(args.scenario), args.out, args.mode,
                                    args.k, args.placement, args.v, args.sample_density)
        if args.command == "compare":
            base = scenario_document(args.scenario) if args.scenario in FIXTURES or Path(args.scenario).exists() else None
            docs = []
            for fx in FIXTURES:
                d = json.loads(json.dumps(base)) if base else make_scenario(fx).to_dict()
                d["privacy"] = {"fixture": fx}
                d["label"] = fx
                docs.append(d)
        else:
            docs = [scenario_document(args.scenario)]
        spec = ExperimentSpec(
            scenarios=docs, methods=tuple(args.methods), k_values=tuple(args.k),
            placements=tuple(args.placement), angles=tuple(args.angle),
            repetitions=args.reps, iterations=args.iters, seed=args.seed, out=args.out,
            workers=args.workers, threshold_v=args.v, samples=args.sample_density,
            mean_price=args.price, standard_angle=args.standard_angle,
        )
        return cmd_run(spec)
    except (ValueError, FileNotFoundError) as exc:
        print(f"camcoord: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
