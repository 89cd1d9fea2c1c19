import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from shapely.geometry import Point, Polygon

from camcoord import _kernels, _pykernels

try:
    from camcoord import _ckernels
except ImportError:
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")
coords = st.integers(-30, 30)


def line_oracle(r0, c0, r1, c1):
    """Minor offset = exact line position rounded half toward the source."""
    dr, dc = r1 - r0, c1 - c0
    n = max(abs(dr), abs(dc))
    out = []
    for i in range(1, n + 1):
        if abs(dc) >= abs(dr):
            minor = math.ceil(Fraction(i * abs(dr), n) - Fraction(1, 2))
            out.append((r0 + int(math.copysign(minor, dr)) if dr else r0, c0 + (i if dc > 0 else -i)))
        else:
            minor = math.ceil(Fraction(i * abs(dc), n) - Fraction(1, 2))
            out.append((r0 + (i if dr > 0 else -i), c0 + int(math.copysign(minor, dc)) if dc else c0))
    return out


def visibility_oracle(obstacles, r0, c0):
    rows, cols = obstacles.shape
    out = np.ones((rows, cols), bool)
    for r in range(rows):
        for c in range(cols):
            out[r, c] = not any(obstacles[rr, cc] for rr, cc in line_oracle(r0, c0, r, c))
    return out


def triangle_oracle(a, b, c, cell, s, r0, r1, c0, c1):
    tri = Polygon([a, b, c])
    out = np.zeros((r1 - r0, c1 - c0), np.int64)
    for r in range(r0, r1):
        for col in range(c0, c1):
            for i in range(s):
                for j in range(s):
                    p = Point((col + (j + 0.5) / s) * cell, (r + (i + 0.5) / s) * cell)
                    out[r - r0, col - c0] += tri.covers(p)
    return out


class TestLineCells:
    def test_hand_examples(self):
        assert _kernels.line_cells(0, 0, 0, 3) == [(0, 1), (0, 2), (0, 3)]
        assert _kernels.line_cells(0, 0, 2, 2) == [(1, 1), (2, 2)]
        assert _kernels.line_cells(0, 0, 4, 8) == [(0, 1), (1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7), (4, 8)]
        assert _kernels.line_cells(3, 3, 3, 3) == []

    @settings(max_examples=200, deadline=None)
    @given(coords, coords, coords, coords)
    def test_matches_fraction_oracle(self, r0, c0, r1, c1):
        assert _pykernels.line_cells(r0, c0, r1, c1) == line_oracle(r0, c0, r1, c1)

    @settings(max_examples=100, deadline=None)
    @given(coords, coords, coords, coords)
    def test_contiguous_and_ends_at_destination(self, r0, c0, r1, c1):
        cells = _kernels.line_cells(r0, c0, r1, c1)
        prev = (r0, c0)
        for cell in cells:
            assert max(abs(cell[0] - prev[0]), abs(cell[1] - prev[1])) == 1
            prev = cell
        assert prev == (r1, c1)

    @settings(max_examples=100, deadline=None)
    @given(coords, coords)
    def test_quarter_turn_equivariant(self, dr, dc):
        # rotate (r, c) -> (c, -r)
        a = _kernels.line_cells(0, 0, dr, dc)
        b = _kernels.line_cells(0, 0, dc, -dr)
        assert b == [(c, -r) for r, c in a]

    @needs_ext
    @settings(max_examples=200, deadline=None)
    @given(coords, coords, coords, coords)
    def test_backend_parity(self, r0, c0, r1, c1):
        assert list(map(tuple, _ckernels.line_cells(r0, c0, r1, c1))) == _pykernels.line_cells(r0, c0, r1, c1)


class TestVisibilityMask:
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        obs = rng.random((9, 12)) < 0.2
        r0, c0 = int(rng.integers(9)), int(rng.integers(12))
        expect = visibility_oracle(obs, r0, c0)
        assert np.array_equal(_pykernels.visibility_mask(obs, r0, c0), expect)
        assert np.array_equal(_kernels.visibility_mask(obs, r0, c0), expect)

    def test_no_obstacles_all_visible(self):
        assert _kernels.visibility_mask(np.zeros((4, 5), bool), 1, 1).all()

    @needs_ext
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_backend_parity(self, seed):
        rng = np.random.default_rng(seed)
        rows, cols = int(rng.integers(1, 20)), int(rng.integers(1, 20))
        obs = rng.random((rows, cols)) < rng.uniform(0, 0.5)
        r0, c0 = int(rng.integers(rows)), int(rng.integers(cols))
        assert np.array_equal(_ckernels.visibility_mask(obs, r0, c0), _pykernels.visibility_mask(obs, r0, c0))


def random_triangle(rng):
    a = rng.uniform(-10, 60, 2)
    b = rng.uniform(-10, 60, 2)
    c = rng.uniform(-10, 60, 2)
    # counterclockwise order (apex, right, left)
    if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0:
        b, c = c, b
    return tuple(a), tuple(b), tuple(c)


class TestTriangleCounts:
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_shapely_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = random_triangle(rng)
        got = _kernels.triangle_counts(a, b, c, 10.0, 4, 0, 5, 0, 5)
        assert np.array_equal(got, triangle_oracle(a, b, c, 10.0, 4, 0, 5, 0, 5))

    def test_empty_box(self):
        assert _kernels.triangle_counts((0, 0), (1, 0), (0, 1), 1.0, 4, 3, 3, 0, 2).shape == (0, 2)

    def test_edge_points_count(self):
        # samples at 0.5 lie exactly on the hypotenuse x + y = 1 of the unit triangle (cell 2)
        got = _kernels.triangle_counts((0, 0), (2, 0), (0, 2), 2.0, 2, 0, 1, 0, 1)
        assert got[0, 0] == 3

    @needs_ext
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
    def test_backend_parity(self, seed, s):
        rng = np.random.default_rng(seed)
        a, b, c = random_triangle(rng)
        args = (a, b, c, 10.0, s, -1, 7, 0, 6)
        assert np.array_equal(_ckernels.triangle_counts(*args), _pykernels.triangle_counts(*args))


def random_csr(rng, n, k):
    rows = [np.sort(rng.choice(n, size=int(rng.integers(0, n + 1)), replace=False)) for _ in range(k)]
    indptr = np.zeros(k + 1, np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows).astype(np.int64) if indptr[-1] else np.zeros(0, np.int64)
    values = rng.integers(1, 17, len(indices)).astype(np.int64)
    return indptr, indices, values


class TestPlanDeltas:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_matches_dense_recomputation(self, seed):
        rng = np.random.default_rng(seed)
        n, k = int(rng.integers(1, 30)), int(rng.integers(1, 8))
        indptr, indices, values = random_csr(rng, n, k)
        resid = rng.integers(-40, 40, n).astype(np.int64)
        base = int(resid @ resid)
        got = _kernels.plan_deltas(resid, indptr, indices, values)
        for row in range(k):
            r = resid.copy()
            r[indices[indptr[row]:indptr[row + 1]]] += values[indptr[row]:indptr[row + 1]]
            assert got[row] == int(r @ r) - base

    @needs_ext
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_backend_parity(self, seed):
        rng = np.random.default_rng(seed)
        n, k = int(rng.integers(1, 30)), int(rng.integers(1, 8))
        indptr, indices, values = random_csr(rng, n, k)
        resid = rng.integers(-40, 40, n).astype(np.int64)
        assert np.array_equal(_ckernels.plan_deltas(resid, indptr, indices, values),
                              _pykernels.plan_deltas(resid, indptr, indices, values))


def test_env_forces_numpy_backend():
    code = "import camcoord._kernels as k; print(k.BACKEND)"
    env = dict(os.environ, CAMCOORD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
