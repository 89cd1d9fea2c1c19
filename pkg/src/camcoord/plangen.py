"""Orientation plan generation with optional privacy filtering.

Each camera tries K orientations ``k * 360 / K`` for k = 1..K. A plan is
kept when it covers something on the map and, in hard-constrained mode,
when its coverage mass on cells with target 0 stays under the threshold V.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, TextIO

import numpy as np

from .errors import NoFeasiblePlanError
from .geometry import DEFAULT_SAMPLES, CameraSpec, GridMap, coverage_vector, visibility_from
from .scenario import Scenario, TargetVector

log = logging.getLogger(__name__)

UNCONSTRAINED = "unconstrained"
HARD = "hard-constrained"
MODES = (UNCONSTRAINED, HARD)

PLAN_CSV_HEADER = ("camera_id", "plan_index", "orientation_deg", "cell_index", "ratio")


@dataclass(frozen=True, eq=False)
class Plan:
    camera_id: int
    plan_index: int
    orientation: float
    cells: np.ndarray
    counts: np.ndarray
    samples: int = DEFAULT_SAMPLES

    @property
    def ratios(self) -> np.ndarray:
        return self.counts / float(self.samples * self.samples)

    @property
    def mass(self) -> float:
        return float(self.counts.sum()) / (self.samples * self.samples)

    def masked_counts(self, mask: np.ndarray) -> int:
        """Sample hits falling on cells where ``mask`` is true."""
        return int(self.counts[mask[self.cells]].sum())

    @property
    def is_idle(self) -> bool:
        return len(self.cells) == 0

    def __eq__(self, other):
        if not isinstance(other, Plan):
            return NotImplemented
        same_orientation = (self.orientation == other.orientation
                            or (math.isnan(self.orientation) and math.isnan(other.orientation)))
        return (self.camera_id == other.camera_id and self.plan_index == other.plan_index
                and same_orientation and self.samples == other.samples
                and np.array_equal(self.cells, other.cells)
                and np.array_equal(self.counts, other.counts))


@dataclass(frozen=True, eq=False)
class PlanSet:
    camera_id: int
    plans: tuple[Plan, ...]
    mode: str = UNCONSTRAINED
    threshold: Optional[float] = None
    idle: bool = field(default=False)

    def __len__(self):
        return len(self.plans)

    def __getitem__(self, i) -> Plan:
        return self.plans[i]

    def __eq__(self, other):
        if not isinstance(other, PlanSet):
            return NotImplemented
        return (self.camera_id == other.camera_id and self.mode == other.mode
                and self.plans == other.plans)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, cell indices, sample counts) over all plans, int64."""
        lengths = [len(p.cells) for p in self.plans]
        indptr = np.zeros(len(self.plans) + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        if indptr[-1]:
            indices = np.concatenate([p.cells for p in self.plans]).astype(np.int64)
            values = np.concatenate([p.counts for p in self.plans]).astype(np.int64)
        else:
            indices = np.zeros(0, dtype=np.int64)
            values = np.zeros(0, dtype=np.int64)
        return indptr, indices, values

    @property
    def orientations(self) -> list[float]:
        return [p.orientation for p in self.plans]


def candidate_orientations(K: int) -> list[float]:
    return [k * 360.0 / K for k in range(1, K + 1)]


def _keep(counts_total: int, private_counts: int, threshold: float, samples: int, mode: str) -> bool:
    if counts_total <= 0:
        return False
    if mode == UNCONSTRAINED:
        return True
    # strict "< V", with V = 0 admitting exactly the zero-mass plans
    return private_counts == 0 or private_counts < threshold * samples * samples


def generate_plans(spec: CameraSpec, K: int, grid: GridMap, target: TargetVector,
                   V: float, mode: str = HARD, samples: int = DEFAULT_SAMPLES,
                   visible: Optional[np.ndarray] = None) -> PlanSet:
    """Plans for one camera; raises :class:`NoFeasiblePlanError` if hard filtering empties the set."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if V < 0:
        raise ValueError("V must be >= 0")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if visible is None and grid.obstacles.any():
        visible = visibility_from(spec, grid)
    forbidden = target.values == 0
    plans = []
    for k, theta in enumerate(candidate_orientations(K), start=1):
        cov = coverage_vector(spec, theta, grid, samples=samples, visible=visible)
        total = int(cov.counts.sum())
        private = int(cov.counts[forbidden[cov.cells]].sum()) if total else 0
        if _keep(total, private, V, samples, mode):
            plans.append(Plan(spec.id, k, theta, cov.cells, cov.counts, samples))
    if not plans:
        raise NoFeasiblePlanError(spec.id, V)
    return PlanSet(spec.id, tuple(plans), mode, V if mode == HARD else None)


def idle_plan_set(camera_id: int, mode: str, samples: int = DEFAULT_SAMPLES) -> PlanSet:
    """A single empty plan: the camera stays dark."""
    empty = np.zeros(0, dtype=np.int64)
    plan = Plan(camera_id, 0, math.nan, empty, empty.copy(), samples)
    return PlanSet(camera_id, (plan,), mode, 0.0, idle=True)


def _camera_plans(scenario: Scenario, spec: CameraSpec, mode: str, K: int, V: float,
                  relax_attempts: int, idle_fallback: bool) -> PlanSet:
    visible = visibility_from(spec, scenario.grid) if scenario.grid.obstacles.any() else None
    threshold = V
    for attempt in range(relax_attempts + 1):
        try:
            return generate_plans(spec, K, scenario.grid, scenario.target, threshold, mode,
                                  scenario.samples, visible)
        except NoFeasiblePlanError:
            if attempt == relax_attempts or threshold == 0:
                break
            threshold *= 2
            log.warning("camera %d: no feasible plan, relaxing V to %g", spec.id, threshold)
    if idle_fallback:
        log.warning("camera %d: no feasible plan at V=%g, camera left idle", spec.id, threshold)
        return idle_plan_set(spec.id, mode, scenario.samples)
    raise NoFeasiblePlanError(spec.id, threshold)


def generate_plan_sets(scenario: Scenario, mode: str = HARD, K: Optional[int] = None,
                       V: Optional[float] = None, relax_attempts: int = 3,
                       idle_fallback: bool = True, workers: int = 1) -> list[PlanSet]:
    """Plan sets for every camera of a scenario.

    A camera left without plans is retried with V doubled up to
    ``relax_attempts`` times. If that still fails (always the case at
    V = 0) the camera is parked on an empty plan when ``idle_fallback``,
    otherwise the error propagates.
    """
    K = scenario.plan_count if K is None else K
    V = scenario.privacy_threshold if V is None else V

    def one(spec):
        return _camera_plans(scenario, spec, mode, K, V, relax_attempts, idle_fallback)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, scenario.cameras))
    return [one(spec) for spec in scenario.cameras]


def export_plans(plan_sets: Iterable[PlanSet]) -> list[tuple[int, int, float, int, float]]:
    """Dataset rows (camera, plan, orientation, cell, ratio) in ascending order."""
    plan_sets = list(plan_sets)
    if not plan_sets:
        raise ValueError("no plan sets to export")
    rows = []
    for ps in sorted(plan_sets, key=lambda p: p.camera_id):
        for plan in sorted(ps.plans, key=lambda p: p.plan_index):
            order = np.argsort(plan.cells, kind="stable")
            ratios = plan.ratios
            for i in order:
                if plan.counts[i] > 0:
                    rows.append((ps.camera_id, plan.plan_index, plan.orientation,
                                 int(plan.cells[i]), float(ratios[i])))
    return rows


def write_plans_csv(plan_sets: Iterable[PlanSet], out: TextIO) -> int:
    rows = export_plans(plan_sets)
    out.write(",".join(PLAN_CSV_HEADER) + "\n")
    for cam, k, theta, cell, ratio in rows:
        out.write(f"{cam},{k},{theta!r},{cell},{ratio:.6f}\n")
    return len(rows)


def plans_csv_text(plan_sets: Iterable[PlanSet]) -> str:
    buf = io.StringIO()
    write_plans_csv(plan_sets, buf)
    return buf.getvalue()


def read_plans_csv(src: TextIO, samples: int = DEFAULT_SAMPLES,
                   mode: str = UNCONSTRAINED) -> list[PlanSet]:
    """Inverse of :func:`write_plans_csv` for plans with at least one covered cell."""
    reader = csv.reader(src)
    header = next(reader, None)
    if tuple(header or ()) != PLAN_CSV_HEADER:
        raise ValueError(f"unexpected plan dataset header {header!r}")
    grouped: dict[int, dict[int, list]] = {}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 5:
            raise ValueError(f"line {lineno}: expected 5 fields, got {len(row)}")
        cam, k, theta, cell, ratio = int(row[0]), int(row[1]), float(row[2]), int(row[3]), float(row[4])
        entry = grouped.setdefault(cam, {}).setdefault(k, [theta, [], []])
        entry[1].append(cell)
        entry[2].append(int(round(ratio * samples * samples)))
    out = []
    for cam in sorted(grouped):
        plans = []
        for k in sorted(grouped[cam]):
            theta, cells, counts = grouped[cam][k]
            plans.append(Plan(cam, k, theta, np.array(cells, dtype=np.int64),
                              np.array(counts, dtype=np.int64), samples))
        out.append(PlanSet(cam, tuple(plans), mode))
    return out
