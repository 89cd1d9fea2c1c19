"""Pure numpy implementations of the hot kernels.

Each function here has a twin in ``_ckernels.pyx``; both must return
bit-identical results for identical inputs.
"""
from __future__ import annotations

import numpy as np


def line_cells(r0: int, c0: int, r1: int, c1: int) -> list[tuple[int, int]]:
    """Cells traversed from (r0, c0) to (r1, c1), source excluded.

    Integer Bresenham stepping along the major axis. The minor offset is
    ``i*m/n`` rounded half toward the source so the traversal commutes with
    quarter turns and mirror flips of the grid.
    """
    r0, c0, r1, c1 = int(r0), int(c0), int(r1), int(c1)
    dr, dc = r1 - r0, c1 - c0
    sr = (dr > 0) - (dr < 0)
    sc = (dc > 0) - (dc < 0)
    adr, adc = abs(dr), abs(dc)
    n = max(adr, adc)
    out = []
    for i in range(1, n + 1):
        if adc >= adr:
            minor = -((n - 2 * i * adr) // (2 * n))
            out.append((r0 + sr * minor, c0 + sc * i))
        else:
            minor = -((n - 2 * i * adc) // (2 * n))
            out.append((r0 + sr * i, c0 + sc * minor))
    return out


def visibility_mask(obstacles: np.ndarray, src_row: int, src_col: int) -> np.ndarray:
    """Boolean (rows, cols) mask of cells visible from the source cell."""
    obstacles = np.asarray(obstacles, dtype=bool)
    rows, cols = obstacles.shape
    if not obstacles.any():
        return np.ones((rows, cols), dtype=bool)
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    dr = rr - src_row
    dc = cc - src_col
    sr = np.sign(dr)
    sc = np.sign(dc)
    adr = np.abs(dr)
    adc = np.abs(dc)
    n = np.maximum(adr, adc)
    xmajor = adc >= adr
    m = np.where(xmajor, adr, adc)
    safe_n = np.maximum(n, 1)
    blocked = np.zeros((rows, cols), dtype=bool)
    for i in range(1, int(n.max()) + 1):
        active = n >= i
        minor = -((safe_n - 2 * i * m) // (2 * safe_n))
        r = np.where(xmajor, src_row + sr * minor, src_row + sr * i)
        c = np.where(xmajor, src_col + sc * i, src_col + sc * minor)
        r = np.where(active, r, src_row)
        c = np.where(active, c, src_col)
        blocked |= active & obstacles[r, c]
    return ~blocked


def triangle_counts(apex, right, left, cell_size: float, samples: int,
                    row_start: int, row_stop: int,
                    col_start: int, col_stop: int) -> np.ndarray:
    """Count s*s sample points per cell that fall inside a closed CCW triangle.

    Returns an int64 array of shape (row_stop-row_start, col_stop-col_start).
    """
    nr = row_stop - row_start
    nc = col_stop - col_start
    if nr <= 0 or nc <= 0:
        return np.zeros((max(nr, 0), max(nc, 0)), dtype=np.int64)
    off = (np.arange(samples) + 0.5) / samples
    # sample coordinates, laid out (row, sub_row, col, sub_col)
    ys = (np.arange(row_start, row_stop)[:, None] + off[None, :]) * cell_size
    xs = (np.arange(col_start, col_stop)[:, None] + off[None, :]) * cell_size
    py = ys[:, :, None, None]
    px = xs[None, None, :, :]
    ax, ay = float(apex[0]), float(apex[1])
    bx, by = float(right[0]), float(right[1])
    cx, cy = float(left[0]), float(left[1])
    e1 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    e2 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
    e3 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
    inside = (e1 >= 0.0) & (e2 >= 0.0) & (e3 >= 0.0)
    return inside.sum(axis=(1, 3), dtype=np.int64)


def plan_deltas(resid: np.ndarray, indptr: np.ndarray, indices: np.ndarray,
                values: np.ndarray) -> np.ndarray:
    """Squared-error change of adding each CSR plan row to ``resid``.

    For plan k: sum over its support of (2*resid[n] + v) * v.
    """
    k = len(indptr) - 1
    out = np.zeros(k, dtype=np.int64)
    if len(indices) == 0:
        return out
    terms = (2 * resid[indices] + values) * values
    lengths = np.diff(indptr)
    nonempty = lengths > 0
    out[nonempty] = np.add.reduceat(terms, indptr[:-1][nonempty])
    return out
