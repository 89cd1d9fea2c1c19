"""Camera coverage model on a 2D cell grid.

Cameras see a closed isosceles triangle: apex at the camera, axis along
the orientation (degrees, counterclockwise from +X), half-width
``range * tan(angle / 2)`` at the far edge. Cell coverage is estimated by
an s-by-s lattice of sample points per cell; a sample counts when it lies
inside the triangle and its cell is visible from the camera cell.

Cells are indexed row-major, ``n = row * cols + col``, with row 0 at y=0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError

DEFAULT_SAMPLES = 4


def horizontal_angle(sensor_width: float, focal_length: float) -> float:
    """Horizontal view angle in degrees, ``2 * atan(w / 2f)``."""
    if sensor_width <= 0 or focal_length <= 0:
        raise DomainError("sensor width and focal length must be positive")
    return math.degrees(2.0 * math.atan(sensor_width / (2.0 * focal_length)))


def fov_area(range_m: float, sensor_width: float, focal_length: float) -> float:
    """Area of the view triangle in square meters, ``x^2 * w / 2f``."""
    if range_m <= 0 or sensor_width <= 0 or focal_length <= 0:
        raise DomainError("range, sensor width and focal length must be positive")
    return range_m * range_m * sensor_width / (2.0 * focal_length)


def fov_area_from_angle(range_m: float, angle_deg: float) -> float:
    if range_m <= 0 or not 0 < angle_deg < 180:
        raise DomainError("range must be positive and angle in (0, 180)")
    return range_m * range_m * math.tan(math.radians(angle_deg) / 2.0)


def cos_sin_deg(theta: float) -> tuple[float, float]:
    """cos and sin of an angle in degrees, exact at multiples of 90.

    The angle is split into whole quarter turns plus a remainder so that
    adding 90 degrees permutes the result exactly.
    """
    theta = theta % 360.0
    quarter = int(theta // 90.0)
    rest = math.radians(theta - 90.0 * quarter)
    c, s = math.cos(rest), math.sin(rest)
    for _ in range(quarter % 4):
        c, s = -s, c
    return c, s


@dataclass(frozen=True)
class CameraSpec:
    id: int
    location: tuple[float, float]
    sensor_width: float
    focal_length: float
    range: float
    angle_override: Optional[float] = None

    def __post_init__(self):
        if self.sensor_width <= 0 or self.focal_length <= 0:
            raise DomainError(f"camera {self.id}: sensor width and focal length must be positive")
        if self.range <= 0:
            raise DomainError(f"camera {self.id}: range must be positive")
        if self.angle_override is not None and not 0 < self.angle_override < 180:
            raise DomainError(f"camera {self.id}: angle must lie in (0, 180) degrees")
        object.__setattr__(self, "location", (float(self.location[0]), float(self.location[1])))

    @property
    def angle(self) -> float:
        if self.angle_override is not None:
            return self.angle_override
        return horizontal_angle(self.sensor_width, self.focal_length)

    @property
    def half_width_ratio(self) -> float:
        """tan(angle / 2)."""
        if self.angle_override is not None:
            return math.tan(math.radians(self.angle_override) / 2.0)
        return self.sensor_width / (2.0 * self.focal_length)

    @property
    def area(self) -> float:
        return self.range * self.range * self.half_width_ratio


class GridMap:
    """Rectangular world split into square cells with obstacle and private masks."""

    def __init__(self, width: float, height: float, cell_size: float,
                 obstacles: Optional[np.ndarray] = None,
                 private_mask: Optional[np.ndarray] = None):
        if width <= 0 or height <= 0 or cell_size <= 0:
            raise DomainError("map extent and cell size must be positive")
        cols = round(width / cell_size)
        rows = round(height / cell_size)
        if not (math.isclose(cols * cell_size, width, rel_tol=1e-9)
                and math.isclose(rows * cell_size, height, rel_tol=1e-9)):
            raise DomainError("map extent must be an integer multiple of the cell size")
        self.width = float(width)
        self.height = float(height)
        self.cell_size = float(cell_size)
        self.rows = int(rows)
        self.cols = int(cols)
        self.obstacles = self._mask(obstacles, "obstacles")
        self.private_mask = self._mask(private_mask, "private_mask")

    def _mask(self, mask, name):
        n = self.rows * self.cols
        if mask is None:
            out = np.zeros(n, dtype=bool)
        else:
            out = np.array(mask, dtype=bool).reshape(-1)
            if out.shape[0] != n:
                raise DomainError(f"{name} must have {n} entries, got {out.shape[0]}")
        out.setflags(write=False)
        return out

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @property
    def cell_area(self) -> float:
        return self.cell_size * self.cell_size

    def replace(self, obstacles=None, private_mask=None) -> "GridMap":
        return GridMap(
            self.width, self.height, self.cell_size,
            self.obstacles if obstacles is None else obstacles,
            self.private_mask if private_mask is None else private_mask,
        )

    def contains(self, point: Sequence[float]) -> bool:
        x, y = point
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def cell_of(self, point: Sequence[float]) -> tuple[int, int]:
        """(row, col) of the cell holding ``point``; the far map edges belong to the last cells."""
        if not self.contains(point):
            raise DomainError(f"point {tuple(point)} lies outside the map")
        x, y = point
        col = min(int(x // self.cell_size), self.cols - 1)
        row = min(int(y // self.cell_size), self.rows - 1)
        return row, col

    def index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def cell_center(self, index: int) -> tuple[float, float]:
        row, col = divmod(index, self.cols)
        return ((col + 0.5) * self.cell_size, (row + 0.5) * self.cell_size)

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and self.cell_size == other.cell_size
                and np.array_equal(self.obstacles, other.obstacles)
                and np.array_equal(self.private_mask, other.private_mask))

    def __repr__(self):
        return (f"GridMap({self.width:g}x{self.height:g} m, cell {self.cell_size:g} m, "
                f"{self.rows}x{self.cols} cells)")


@dataclass(frozen=True)
class FovTriangle:
    apex: tuple[float, float]
    left_vertex: tuple[float, float]
    right_vertex: tuple[float, float]

    @property
    def area(self) -> float:
        (ax, ay), (lx, ly), (rx, ry) = self.apex, self.left_vertex, self.right_vertex
        return 0.5 * abs((rx - ax) * (ly - ay) - (ry - ay) * (lx - ax))

    def bounds(self) -> tuple[float, float, float, float]:
        xs = (self.apex[0], self.left_vertex[0], self.right_vertex[0])
        ys = (self.apex[1], self.left_vertex[1], self.right_vertex[1])
        return min(xs), min(ys), max(xs), max(ys)


def fov_triangle(spec: CameraSpec, orientation: float) -> FovTriangle:
    x = spec.range
    y = spec.range * spec.half_width_ratio
    c, s = cos_sin_deg(orientation)
    lx, ly = spec.location
    left = (lx + (c * x - s * y), ly + (s * x + c * y))
    right = (lx + (c * x + s * y), ly + (s * x - c * y))
    return FovTriangle(apex=(lx, ly), left_vertex=left, right_vertex=right)


def point_visible(src: Sequence[float], dst: Sequence[float], grid: GridMap) -> bool:
    """Line of sight between two points, judged on the cells between them.

    The source cell is skipped; any obstacle on the traversal, including
    the destination cell, blocks the view.
    """
    r0, c0 = grid.cell_of(src)
    r1, c1 = grid.cell_of(dst)
    obstacles = grid.obstacles
    for r, c in _kernels.line_cells(r0, c0, r1, c1):
        if obstacles[r * grid.cols + c]:
            return False
    return True


def visibility_from(spec: CameraSpec, grid: GridMap) -> np.ndarray:
    """Flat boolean mask of cells visible from the camera's cell."""
    row, col = grid.cell_of(spec.location)
    obstacles = grid.obstacles.reshape(grid.rows, grid.cols)
    return _kernels.visibility_mask(obstacles, row, col).reshape(-1)


class Coverage(NamedTuple):
    """Sparse per-cell coverage: sample hit counts out of ``samples**2``."""

    cells: np.ndarray
    counts: np.ndarray
    samples: int

    @property
    def ratios(self) -> np.ndarray:
        return self.counts / float(self.samples * self.samples)

    def total(self) -> float:
        return float(self.counts.sum()) / (self.samples * self.samples)

    def dense(self, n_cells: int) -> np.ndarray:
        out = np.zeros(n_cells)
        out[self.cells] = self.ratios
        return out


def _box(tri: FovTriangle, grid: GridMap) -> tuple[int, int, int, int]:
    minx, miny, maxx, maxy = tri.bounds()
    cs = grid.cell_size
    c0 = max(0, math.floor(minx / cs))
    c1 = min(grid.cols, math.floor(maxx / cs) + 1)
    r0 = max(0, math.floor(miny / cs))
    r1 = min(grid.rows, math.floor(maxy / cs) + 1)
    return r0, r1, c0, c1


def coverage_vector(spec: CameraSpec, orientation: float, grid: GridMap,
                    samples: int = DEFAULT_SAMPLES,
                    visible: Optional[np.ndarray] = None) -> Coverage:
    """Sparse coverage of one camera orientation.

    ``visible`` may carry a precomputed :func:`visibility_from` mask; it
    does not depend on the orientation.
    """
    if samples < 1:
        raise DomainError("sample density must be at least 1")
    tri = fov_triangle(spec, orientation)
    r0, r1, c0, c1 = _box(tri, grid)
    counts = _kernels.triangle_counts(tri.apex, tri.right_vertex, tri.left_vertex,
                                      grid.cell_size, samples, r0, r1, c0, c1)
    if counts.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return Coverage(empty, empty.copy(), samples)
    rr, cc = np.nonzero(counts)
    cells = (rr + r0) * grid.cols + (cc + c0)
    vals = counts[rr, cc]
    if grid.obstacles.any():
        if visible is None:
            visible = visibility_from(spec, grid)
        keep = visible[cells]
        cells, vals = cells[keep], vals[keep]
    return Coverage(cells.astype(np.int64), vals.astype(np.int64), samples)


def coverage_ratio(spec: CameraSpec, orientation: float, cell_index: int, grid: GridMap,
                   samples: int = DEFAULT_SAMPLES) -> float:
    if not 0 <= cell_index < grid.n_cells:
        raise DomainError(f"cell index {cell_index} outside 0..{grid.n_cells - 1}")
    row, col = divmod(cell_index, grid.cols)
    tri = fov_triangle(spec, orientation)
    count = int(_kernels.triangle_counts(tri.apex, tri.right_vertex, tri.left_vertex,
                                         grid.cell_size, samples, row, row + 1, col, col + 1)[0, 0])
    if count and grid.obstacles.any():
        center = grid.cell_center(cell_index)
        if not point_visible(spec.location, center, grid):
            return 0.0
    return count / float(samples * samples)
