# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline long _floordiv(long a, long b) noexcept nogil:
    # b > 0 at every call site
    cdef long q = a / b
    if a % b != 0 and a < 0:
        q -= 1
    return q


def line_cells(long r0, long c0, long r1, long c1):
    cdef long dr = r1 - r0, dc = c1 - c0
    cdef long sr = (dr > 0) - (dr < 0)
    cdef long sc = (dc > 0) - (dc < 0)
    cdef long adr = dr if dr >= 0 else -dr
    cdef long adc = dc if dc >= 0 else -dc
    cdef long n = adr if adr > adc else adc
    cdef long i, minor
    out = []
    for i in range(1, n + 1):
        if adc >= adr:
            minor = -_floordiv(n - 2 * i * adr, 2 * n)
            out.append((r0 + sr * minor, c0 + sc * i))
        else:
            minor = -_floordiv(n - 2 * i * adc, 2 * n)
            out.append((r0 + sr * i, c0 + sc * minor))
    return out


def visibility_mask(obstacles, long src_row, long src_col):
    cdef cnp.uint8_t[:, ::1] obs = np.ascontiguousarray(obstacles, dtype=np.uint8)
    cdef long rows = obs.shape[0], cols = obs.shape[1]
    out_arr = np.ones((rows, cols), dtype=bool)
    cdef cnp.uint8_t[:, ::1] out = out_arr.view(np.uint8)
    cdef long r, c, dr, dc, sr, sc, adr, adc, n, i, minor, rr, cc
    with nogil:
        for r in range(rows):
            for c in range(cols):
                dr = r - src_row
                dc = c - src_col
                sr = (dr > 0) - (dr < 0)
                sc = (dc > 0) - (dc < 0)
                adr = dr if dr >= 0 else -dr
                adc = dc if dc >= 0 else -dc
                n = adr if adr > adc else adc
                for i in range(1, n + 1):
                    if adc >= adr:
                        minor = -_floordiv(n - 2 * i * adr, 2 * n)
                        rr = src_row + sr * minor
                        cc = src_col + sc * i
                    else:
                        minor = -_floordiv(n - 2 * i * adc, 2 * n)
                        rr = src_row + sr * i
                        cc = src_col + sc * minor
                    if obs[rr, cc]:
                        out[r, c] = 0
                        break
    return out_arr


def triangle_counts(apex, right, left, double cell_size, long samples,
                    long row_start, long row_stop, long col_start, long col_stop):
    cdef long nr = row_stop - row_start
    cdef long nc = col_stop - col_start
    if nr <= 0 or nc <= 0:
        return np.zeros((max(nr, 0), max(nc, 0)), dtype=np.int64)
    out_arr = np.zeros((nr, nc), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    off_arr = (np.arange(samples) + 0.5) / samples
    cdef double[::1] off = off_arr
    cdef double ax = apex[0], ay = apex[1]
    cdef double bx = right[0], by = right[1]
    cdef double cx = left[0], cy = left[1]
    cdef long r, c, i, j, cnt
    cdef double px, py, e1, e2, e3
    with nogil:
        for r in range(nr):
            for c in range(nc):
                cnt = 0
                for i in range(samples):
                    py = ((row_start + r) + off[i]) * cell_size
                    for j in range(samples):
                        px = ((col_start + c) + off[j]) * cell_size
                        e1 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
                        e2 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
                        e3 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
                        if e1 >= 0.0 and e2 >= 0.0 and e3 >= 0.0:
                            cnt += 1
                out[r, c] = cnt
    return out_arr


def plan_deltas(resid, indptr, indices, values):
    cdef cnp.int64_t[::1] res = np.ascontiguousarray(resid, dtype=np.int64)
    cdef cnp.int64_t[::1] ptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.int64_t[::1] val = np.ascontiguousarray(values, dtype=np.int64)
    cdef long k = ptr.shape[0] - 1
    out_arr = np.zeros(k, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef long p, t
    cdef cnp.int64_t acc, v
    with nogil:
        for p in range(k):
            acc = 0
            for t in range(ptr[p], ptr[p + 1]):
                v = val[t]
                acc += (2 * res[idx[t]] + v) * v
            out[p] = acc
    return out_arr
