"""Scenario definition: map, camera lattice, private regions and target.

A scenario document is JSON::

    {
      "label": "squares4-4x4",
      "map": {"width_m": 400, "height_m": 400, "cell_m": 10,
              "obstacles": [{"rows": [0, 2], "cols": [5, 6]}]},
      "cameras": {"rows": 4, "cols": 4,            # or "locations": [[x, y], ...]
                  "sensor_w_m": 0.035, "focal_m": 0.031,
                  "range_m": 155.4, "angle_deg": 45},
      "privacy": {"fixture": "squares4",
                  "rectangles": [{"rows": [a, b], "cols": [c, d]}],
                  "threshold_v": 5.0},
      "plans": {"count": 90},
      "sampling": {"density": 4}
    }

Rectangles are in cell coordinates with exclusive stops. ``range_m`` and
``threshold_v`` are optional; see :func:`default_range` and
:func:`default_threshold`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DomainError, ScenarioError
from .geometry import DEFAULT_SAMPLES, CameraSpec, GridMap

FIXTURES = ("open", "squares4", "lanes2", "squares9")

DEFAULT_SENSOR_WIDTH = 0.035
DEFAULT_FOCAL_LENGTH = 0.031
DEFAULT_ANGLE = 45.0
DEFAULT_PLAN_COUNT = 90
THRESHOLD_FRACTION = 0.05


@dataclass(frozen=True)
class PrivateRegion:
    """Axis-aligned block of cells, ``[row_start, row_stop) x [col_start, col_stop)``."""

    row_start: int
    row_stop: int
    col_start: int
    col_stop: int

    def __post_init__(self):
        if self.row_stop <= self.row_start or self.col_stop <= self.col_start:
            raise DomainError(f"empty region {self}")

    def check_bounds(self, grid: GridMap):
        if (self.row_start < 0 or self.col_start < 0
                or self.row_stop > grid.rows or self.col_stop > grid.cols):
            raise DomainError(f"region {self} outside {grid.rows}x{grid.cols} grid")

    def mask(self, grid: GridMap) -> np.ndarray:
        m = np.zeros((grid.rows, grid.cols), dtype=bool)
        m[self.row_start:self.row_stop, self.col_start:self.col_stop] = True
        return m.reshape(-1)

    @property
    def n_cells(self) -> int:
        return (self.row_stop - self.row_start) * (self.col_stop - self.col_start)

    def to_json(self) -> dict:
        return {"rows": [self.row_start, self.row_stop], "cols": [self.col_start, self.col_stop]}


class TargetVector:
    """Required coverage per cell, 0 or 1."""

    def __init__(self, values):
        v = np.array(values, dtype=np.int64).reshape(-1)
        if not np.isin(v, (0, 1)).all():
            raise DomainError("target values must be 0 or 1")
        v.setflags(write=False)
        self.values = v

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, TargetVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"TargetVector(N={len(self)}, required={int(self.values.sum())})"


def build_target(grid: GridMap, regions: Sequence[PrivateRegion]) -> tuple[TargetVector, GridMap]:
    """Target vector plus a copy of ``grid`` whose private mask marks ``regions``.

    Obstacle cells are never required.
    """
    private = np.zeros(grid.n_cells, dtype=bool)
    for region in regions:
        region.check_bounds(grid)
        private |= region.mask(grid)
    target = np.where(private | grid.obstacles, 0, 1)
    return TargetVector(target), grid.replace(private_mask=private)


def grid_placement(rows: int, cols: int, grid: GridMap) -> list[tuple[float, float]]:
    if rows < 1 or cols < 1:
        raise DomainError("placement needs at least one row and column")
    return [((j + 0.5) * grid.width / cols, (i + 0.5) * grid.height / rows)
            for i in range(rows) for j in range(cols)]


def fixture_regions(name: str, rows: int, cols: int) -> list[PrivateRegion]:
    """Private-region layouts scaled to a ``rows x cols`` grid.

    Sizes are fractions of a 100x100 reference grid: squares are 20x20,
    lanes 15 columns wide and full height.
    """
    if name == "open":
        return []
    if name in ("squares4", "squares9"):
        per_side = 2 if name == "squares4" else 3
        h = max(1, round(0.2 * rows))
        w = max(1, round(0.2 * cols))
        out = []
        for i in range(per_side):
            r0 = round((i + 0.5) * rows / per_side - h / 2)
            for j in range(per_side):
                c0 = round((j + 0.5) * cols / per_side - w / 2)
                out.append(PrivateRegion(r0, r0 + h, c0, c0 + w))
        return out
    if name == "lanes2":
        w = max(1, round(0.15 * cols))
        out = []
        for frac in (1 / 3, 2 / 3):
            c0 = round(frac * cols - w / 2)
            out.append(PrivateRegion(0, rows, c0, c0 + w))
        return out
    raise ScenarioError("privacy.fixture", f"unknown fixture {name!r}; expected one of {FIXTURES}")


def default_range(map_area: float, n_cameras: int, angle_deg: float) -> float:
    """Range at which the cameras' triangles tile ``map_area`` without overlap."""
    return math.sqrt(map_area / (n_cameras * math.tan(math.radians(angle_deg) / 2.0)))


def default_threshold(fov_area_m2: float, cell_area: float) -> float:
    """5% of the view triangle's area, measured in cells of coverage mass."""
    return THRESHOLD_FRACTION * fov_area_m2 / cell_area


@dataclass(frozen=True, eq=False)
class Scenario:
    grid: GridMap
    cameras: tuple[CameraSpec, ...]
    target: TargetVector
    plan_count: int
    privacy_threshold: float
    label: str = "scenario"
    samples: int = DEFAULT_SAMPLES
    placement: Optional[tuple[int, int]] = None
    fixture: Optional[str] = None
    regions: tuple[PrivateRegion, ...] = field(default_factory=tuple)
    obstacle_regions: tuple[PrivateRegion, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.cameras:
            raise ScenarioError("cameras", "at least one camera is required")
        if self.plan_count < 1:
            raise ScenarioError("plans.count", "must be >= 1")
        if self.privacy_threshold < 0:
            raise ScenarioError("privacy.threshold_v", "must be >= 0")
        if len(self.target) != self.grid.n_cells:
            raise ScenarioError("target", "length differs from the cell count")
        for cam in self.cameras:
            if not self.grid.contains(cam.location):
                raise ScenarioError(f"cameras[{cam.id}]", f"location {cam.location} outside map")

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    @property
    def placement_label(self) -> str:
        if self.placement is None:
            return f"custom{self.n_cameras}"
        return f"{self.placement[0]}x{self.placement[1]}"

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.grid == other.grid and self.cameras == other.cameras
                and self.target == other.target and self.plan_count == other.plan_count
                and self.privacy_threshold == other.privacy_threshold
                and self.label == other.label and self.samples == other.samples)

    def to_dict(self) -> dict:
        cam0 = self.cameras[0]
        cams: dict[str, Any] = {}
        if self.placement is not None:
            cams["rows"], cams["cols"] = self.placement
        else:
            cams["locations"] = [list(c.location) for c in self.cameras]
        cams.update(sensor_w_m=cam0.sensor_width, focal_m=cam0.focal_length, range_m=cam0.range)
        if cam0.angle_override is not None:
            cams["angle_deg"] = cam0.angle_override
        privacy: dict[str, Any] = {}
        if self.fixture is not None:
            privacy["fixture"] = self.fixture
        extra = list(self.regions)
        if self.fixture is not None:
            fixed = fixture_regions(self.fixture, self.grid.rows, self.grid.cols)
            extra = extra[len(fixed):]
        if extra:
            privacy["rectangles"] = [r.to_json() for r in extra]
        privacy["threshold_v"] = self.privacy_threshold
        grid_doc: dict[str, Any] = {"width_m": self.grid.width, "height_m": self.grid.height,
                                    "cell_m": self.grid.cell_size}
        if self.obstacle_regions:
            grid_doc["obstacles"] = [r.to_json() for r in self.obstacle_regions]
        return {
            "label": self.label,
            "map": grid_doc,
            "cameras": cams,
            "privacy": privacy,
            "plans": {"count": self.plan_count},
            "sampling": {"density": self.samples},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _get(doc: dict, key: str, path: str, kind=None, required=True, default=None):
    if not isinstance(doc, dict):
        raise ScenarioError(path, "expected an object")
    if key not in doc:
        if required:
            raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
        return default
    value = doc[key]
    if kind is not None:
        ok = isinstance(value, kind) and not (kind in (int, (int, float)) and isinstance(value, bool))
        if not ok:
            raise ScenarioError(f"{path}.{key}" if path else key,
                                f"expected {getattr(kind, '__name__', 'number')}, got {type(value).__name__}")
    return value


_NUM = (int, float)


def _rects(items, path: str) -> list[PrivateRegion]:
    if not isinstance(items, list):
        raise ScenarioError(path, "expected a list of rectangles")
    out = []
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        rows = _get(item, "rows", p, list)
        cols = _get(item, "cols", p, list)
        if len(rows) != 2 or len(cols) != 2 or not all(isinstance(v, int) for v in rows + cols):
            raise ScenarioError(p, "rows and cols must be [start, stop] integer pairs")
        try:
            out.append(PrivateRegion(rows[0], rows[1], cols[0], cols[1]))
        except DomainError as exc:
            raise ScenarioError(p, str(exc)) from None
    return out


def load_scenario(config: str | dict) -> Scenario:
    """Parse and validate a scenario document (JSON text or decoded dict)."""
    if isinstance(config, str):
        try:
            doc = json.loads(config)
        except json.JSONDecodeError as exc:
            raise ScenarioError("", f"invalid JSON: {exc}") from None
    else:
        doc = config
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario document must be an object")

    label = _get(doc, "label", "", str, required=False, default="scenario")
    m = _get(doc, "map", "", dict)
    width = _get(m, "width_m", "map", _NUM)
    height = _get(m, "height_m", "map", _NUM)
    cell = _get(m, "cell_m", "map", _NUM)
    try:
        grid = GridMap(width, height, cell)
    except DomainError as exc:
        raise ScenarioError("map", str(exc)) from None
    obstacle_regions = _rects(_get(m, "obstacles", "map", list, required=False, default=[]),
                              "map.obstacles")
    if obstacle_regions:
        obstacles = np.zeros(grid.n_cells, dtype=bool)
        for i, region in enumerate(obstacle_regions):
            try:
                region.check_bounds(grid)
            except DomainError as exc:
                raise ScenarioError(f"map.obstacles[{i}]", str(exc)) from None
            obstacles |= region.mask(grid)
        grid = grid.replace(obstacles=obstacles)

    c = _get(doc, "cameras", "", dict)
    sensor_w = _get(c, "sensor_w_m", "cameras", _NUM, required=False, default=DEFAULT_SENSOR_WIDTH)
    focal = _get(c, "focal_m", "cameras", _NUM, required=False, default=DEFAULT_FOCAL_LENGTH)
    angle = _get(c, "angle_deg", "cameras", _NUM, required=False, default=None)
    placement = None
    if "locations" in c:
        locs = c["locations"]
        if not isinstance(locs, list):
            raise ScenarioError("cameras.locations", "expected a list of [x, y] pairs")
        locations = []
        for i, loc in enumerate(locs):
            if (not isinstance(loc, list) or len(loc) != 2
                    or not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in loc)):
                raise ScenarioError(f"cameras.locations[{i}]", "expected an [x, y] pair")
            locations.append((float(loc[0]), float(loc[1])))
    else:
        rows = _get(c, "rows", "cameras", int)
        cols = _get(c, "cols", "cameras", int)
        if rows < 1 or cols < 1:
            raise ScenarioError("cameras.rows" if rows < 1 else "cameras.cols", "must be >= 1")
        placement = (rows, cols)
        locations = grid_placement(rows, cols, grid)
    if not locations:
        raise ScenarioError("cameras", "at least one camera is required")
    if angle is not None and not 0 < angle < 180:
        raise ScenarioError("cameras.angle_deg", "must lie in (0, 180)")
    if sensor_w <= 0 or focal <= 0:
        raise ScenarioError("cameras", "sensor_w_m and focal_m must be positive")
    eff_angle = angle if angle is not None else math.degrees(2 * math.atan(sensor_w / (2 * focal)))
    rng = _get(c, "range_m", "cameras", _NUM, required=False, default=None)
    if rng is None:
        rng = default_range(grid.width * grid.height, len(locations), eff_angle)
    if rng <= 0:
        raise ScenarioError("cameras.range_m", "must be positive")
    cameras = []
    for i, loc in enumerate(locations):
        if not grid.contains(loc):
            raise ScenarioError(f"cameras.locations[{i}]", f"{loc} lies outside the map")
        cameras.append(CameraSpec(i, loc, float(sensor_w), float(focal), float(rng),
                                  None if angle is None else float(angle)))

    p = _get(doc, "privacy", "", dict, required=False, default={})
    fixture = _get(p, "fixture", "privacy", str, required=False, default=None)
    regions = []
    if fixture is not None:
        regions.extend(fixture_regions(fixture, grid.rows, grid.cols))
    regions.extend(_rects(_get(p, "rectangles", "privacy", list, required=False, default=[]),
                          "privacy.rectangles"))
    for i, region in enumerate(regions):
        try:
            region.check_bounds(grid)
        except DomainError as exc:
            raise ScenarioError(f"privacy.rectangles[{i}]", str(exc)) from None
    target, grid = build_target(grid, regions)
    if not target.values.any():
        raise ScenarioError("privacy", "no required cell left to cover")
    threshold = _get(p, "threshold_v", "privacy", _NUM, required=False, default=None)
    if threshold is None:
        threshold = default_threshold(cameras[0].area, grid.cell_area)

    plans = _get(doc, "plans", "", dict, required=False, default={})
    count = _get(plans, "count", "plans", int, required=False, default=DEFAULT_PLAN_COUNT)
    sampling = _get(doc, "sampling", "", dict, required=False, default={})
    density = _get(sampling, "density", "sampling", int, required=False, default=DEFAULT_SAMPLES)
    if density < 1:
        raise ScenarioError("sampling.density", "must be >= 1")

    return Scenario(grid=grid, cameras=tuple(cameras), target=target, plan_count=count,
                    privacy_threshold=float(threshold), label=label, samples=density,
                    placement=placement, fixture=fixture, regions=tuple(regions),
                    obstacle_regions=tuple(obstacle_regions))


def make_scenario(fixture: str = "open", placement: tuple[int, int] = (4, 4),
                  plan_count: int = DEFAULT_PLAN_COUNT, map_m: float = 400.0,
                  cell_m: float = 10.0, angle_deg: Optional[float] = DEFAULT_ANGLE,
                  range_m: Optional[float] = None, threshold_v: Optional[float] = None,
                  samples: int = DEFAULT_SAMPLES, label: Optional[str] = None) -> Scenario:
    """Shortcut for a square map with a camera lattice and a named fixture."""
    doc: dict[str, Any] = {
        "label": label or f"{fixture}-{placement[0]}x{placement[1]}",
        "map": {"width_m": map_m, "height_m": map_m, "cell_m": cell_m},
        "cameras": {"rows": placement[0], "cols": placement[1]},
        "privacy": {"fixture": fixture},
        "plans": {"count": plan_count},
        "sampling": {"density": samples},
    }
    if angle_deg is not None:
        doc["cameras"]["angle_deg"] = angle_deg
    if range_m is not None:
        doc["cameras"]["range_m"] = range_m
    if threshold_v is not None:
        doc["privacy"]["threshold_v"] = threshold_v
    return load_scenario(doc)
