"""Coverage and privacy metrics over aggregate plans."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coordination import rmse_cost
from .errors import DomainError
from .geometry import GridMap
from .plangen import PlanSet
from .scenario import TargetVector

MATCH_EPS = 1e-6

LOSS, MATCH, OVERLAP = -1, 0, 1

METRICS_HEADER = ("scenario", "method", "placement", "K", "inefficiency", "privacy_violation",
                  "coverage_ratio", "camera_violation", "interp_cost")


@dataclass(frozen=True)
class Selection:
    """One chosen plan (position within its PlanSet) per camera."""

    choices: tuple[int, ...]
    method: str

    def plan_indices(self, plan_sets: Sequence[PlanSet]) -> list[int]:
        return [ps.plans[k].plan_index for ps, k in zip(plan_sets, self.choices)]


@dataclass(frozen=True)
class MetricsReport:
    coverage_inefficiency: float
    privacy_violation_rate: float
    total_coverage_ratio: float
    cameras_violation_rate: float
    interpolated_total_cost: float
    method: str = ""
    scenario: str = ""
    uncapped_private_mass: float = 0.0


def aggregate(choices: Sequence[int], plan_sets: Sequence[PlanSet], n_cells: int) -> np.ndarray:
    """Dense aggregate coverage ratios for the chosen plans."""
    if len(choices) != len(plan_sets):
        raise DomainError("one choice per plan set required")
    G = np.zeros(n_cells)
    for ps, k in zip(plan_sets, choices):
        if not 0 <= k < len(ps):
            raise DomainError(f"camera {ps.camera_id} has no plan at position {k}")
        plan = ps.plans[k]
        np.add.at(G, plan.cells, plan.ratios)
    return G


def privacy_violation_rate(G: np.ndarray, grid: GridMap) -> float:
    private = grid.private_mask
    if not private.any():
        return 0.0
    # uniform cell areas cancel
    return float(np.minimum(G[private], 1.0).sum() / private.sum())


def total_coverage_ratio(G: np.ndarray, grid: GridMap, target: TargetVector) -> float:
    required = (target.values == 1) & ~grid.private_mask
    if not required.any():
        raise DomainError("no required cells")
    return float(np.minimum(G[required], 1.0).sum() / required.sum())


def cameras_violation_rate(choices: Sequence[int], plan_sets: Sequence[PlanSet], grid: GridMap) -> float:
    if not plan_sets:
        raise DomainError("no cameras")
    private = grid.private_mask
    violating = sum(1 for ps, k in zip(plan_sets, choices) if ps.plans[k].masked_counts(private) > 0)
    return violating / len(plan_sets)


def interpolated_cost(mean_price: float, required_angle: float, standard_angle: float) -> float:
    """Per-camera price scaled by required over standard view angle."""
    if mean_price <= 0 or required_angle <= 0 or standard_angle <= 0:
        raise DomainError("price and angles must be positive")
    return mean_price * required_angle / standard_angle


def total_interpolated_cost(n_cameras: int, mean_price: float, required_angle: float,
                            standard_angle: float) -> float:
    return n_cameras * interpolated_cost(mean_price, required_angle, standard_angle)


def overlap_loss_heatmap(G, T) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell label (LOSS/MATCH/OVERLAP) and signed mismatch ``G - T``."""
    G = np.asarray(G, dtype=float)
    T = np.asarray(getattr(T, "values", T), dtype=float)
    if G.shape != T.shape:
        raise DomainError("length mismatch")
    diff = G - T
    labels = np.where(diff > MATCH_EPS, OVERLAP, np.where(-diff > MATCH_EPS, LOSS, MATCH))
    return labels.astype(np.int8), diff


def evaluate(choices: Sequence[int], plan_sets: Sequence[PlanSet], grid: GridMap,
             target: TargetVector, method: str = "", scenario: str = "",
             mean_price: float = 1.0, required_angle: float = 45.0,
             standard_angle: float = 45.0) -> MetricsReport:
    G = aggregate(choices, plan_sets, grid.n_cells)
    return MetricsReport(
        coverage_inefficiency=rmse_cost(G, target),
        privacy_violation_rate=privacy_violation_rate(G, grid),
        total_coverage_ratio=total_coverage_ratio(G, grid, target),
        cameras_violation_rate=cameras_violation_rate(choices, plan_sets, grid),
        interpolated_total_cost=total_interpolated_cost(len(plan_sets), mean_price,
                                                        required_angle, standard_angle),
        method=method,
        scenario=scenario,
        uncapped_private_mass=float(G[grid.private_mask].sum()),
    )


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()) if v.size else 0.0, 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def heatmap_csv(labels: np.ndarray, diff: np.ndarray, rows: int, cols: int) -> str:
    lines = ["cell_index,row,col,label,diff"]
    names = {LOSS: "loss", MATCH: "match", OVERLAP: "overlap"}
    for n in range(rows * cols):
        r, c = divmod(n, cols)
        lines.append(f"{n},{r},{c},{names[int(labels[n])]},{diff[n]:.6f}")
    return "\n".join(lines) + "\n"


PGM_LEVELS = {LOSS: 0, MATCH: 128, OVERLAP: 255}


def heatmap_pgm(labels: np.ndarray, rows: int, cols: int) -> str:
    """Plain PGM (P2); image row 0 is the map's top edge (highest y)."""
    grid = labels.reshape(rows, cols)[::-1]
    lines = ["P2", f"{cols} {rows}", "255"]
    for row in grid:
        lines.append(" ".join(str(PGM_LEVELS[int(v)]) for v in row))
    return "\n".join(lines) + "\n"
