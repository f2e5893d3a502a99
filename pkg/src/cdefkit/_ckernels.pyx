# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: direction search and plane filtering."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint16_t, int32_t

cnp.import_array()

# line factor 840 / N_{d,k}, indexed [d][k]
cdef int FACTOR[8][15]
# primary offsets [d][near/far][row/col]
cdef int DIR_OFF[8][2][2]


def _init_tables(factors, offsets):
    cdef int d, k
    for d in range(8):
        for k in range(15):
            FACTOR[d][k] = factors[d][k] if k < len(factors[d]) else 0
        for k in range(2):
            DIR_OFF[d][k][0] = offsets[d][k][0]
            DIR_OFF[d][k][1] = offsets[d][k][1]


cdef inline int line_of(int d, int i, int j) noexcept nogil:
    if d == 0:
        return i + j
    elif d == 1:
        return i + j // 2
    elif d == 2:
        return i
    elif d == 3:
        return 3 + i - j // 2
    elif d == 4:
        return 7 + i - j
    elif d == 5:
        return 3 - i // 2 + j
    elif d == 6:
        return j
    return i // 2 + j


def search_directions(const uint16_t[:, ::1] padded, int coeff_shift):
    cdef Py_ssize_t ur = padded.shape[0] // 8
    cdef Py_ssize_t uc = padded.shape[1] // 8
    dirs_a = np.zeros((ur, uc), np.uint8)
    contrast_a = np.zeros((ur, uc), np.int32)
    scores_a = np.zeros((ur, uc, 8), np.int32)
    cdef uint8_t[:, ::1] dirs = dirs_a
    cdef int32_t[:, ::1] contrast = contrast_a
    cdef int32_t[:, :, ::1] scores = scores_a
    cdef int partial[8][15]
    cdef int cost[8]
    cdef Py_ssize_t r, c
    cdef int d, i, j, k, x, best
    with nogil:
        for r in range(ur):
            for c in range(uc):
                for d in range(8):
                    for k in range(15):
                        partial[d][k] = 0
                for i in range(8):
                    for j in range(8):
                        x = (padded[r * 8 + i, c * 8 + j] >> coeff_shift) - 128
                        for d in range(8):
                            partial[d][line_of(d, i, j)] += x
                for d in range(8):
                    cost[d] = 0
                    for k in range(15):
                        cost[d] += partial[d][k] * partial[d][k] * FACTOR[d][k]
                    scores[r, c, d] = cost[d]
                best = 0
                for d in range(1, 8):
                    if cost[d] > cost[best]:
                        best = d
                dirs[r, c] = best
                contrast[r, c] = cost[best] - cost[(best + 4) & 7]
    return dirs_a, contrast_a, scores_a


cdef inline int msb(int v) noexcept nogil:
    cdef int n = -1
    while v > 0:
        v >>= 1
        n += 1
    return n


cdef inline int constrain(int diff, int strength, int shift) noexcept nogil:
    # branch-free; strength 0 gives v <= 0 -> 0
    cdef int sgn = diff >> 31
    cdef int mag = (diff ^ sgn) - sgn
    cdef int v = strength - (mag >> shift)
    v = v if v > 0 else 0
    v = v if v < mag else mag
    return (v ^ sgn) - sgn


cdef inline int finish(int x, int total, int lo, int hi) noexcept nogil:
    # round half away from zero, then clamp to the tap range
    cdef int sgn = total >> 31
    cdef int mag = (((total ^ sgn) - sgn) + 8) >> 4
    x = x + ((mag ^ sgn) - sgn)
    x = x if x > lo else lo
    return x if x < hi else hi


def filter_plane_rows(const uint16_t[:, ::1] src,
                      const uint8_t[:, ::1] dirs,
                      const int32_t[:, ::1] pri,
                      const int32_t[:, ::1] sec,
                      const int32_t[:, ::1] damp,
                      const uint8_t[:, ::1] enabled,
                      int coeff_shift, int unit_row0):
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t nr = dirs.shape[0]
    cdef Py_ssize_t uc = dirs.shape[1]
    cdef Py_ssize_t row0 = unit_row0 * 8
    cdef Py_ssize_t row1 = min(h, row0 + nr * 8)
    out_a = np.array(src[row0:row1], dtype=np.uint16, copy=True)
    cdef uint16_t[:, ::1] out = out_a
    cdef const uint16_t* base = &src[0, 0]
    cdef const uint16_t* row
    cdef Py_ssize_t r, c, i, j, y, xx, i0, j0, i_end, j_end
    cdef int d, t, k, sgn, sd, x, p, total, lo, hi, ps, ss, pshift, sshift, jj
    # per-unit tap list: row/col offset, flat offset, weight, strength, shift
    cdef int toi[12]
    cdef int toj[12]
    cdef Py_ssize_t toff[12]
    cdef int tw[12]
    cdef int ts[12]
    cdef int tsh[12]
    cdef int xs[8]
    cdef int acc[8]
    cdef int los[8]
    cdef int his[8]
    with nogil:
        for r in range(nr):
            for c in range(uc):
                if not enabled[r, c]:
                    continue
                d = dirs[r, c]
                ps = pri[r, c]
                ss = sec[r, c]
                pshift = damp[r, c] - msb(ps) if ps > 0 else 0
                sshift = damp[r, c] - msb(ss) if ss > 0 else 0
                t = 0
                for k in range(2):
                    for sgn in range(2):
                        toi[t] = -DIR_OFF[d][k][0] if sgn else DIR_OFF[d][k][0]
                        toj[t] = -DIR_OFF[d][k][1] if sgn else DIR_OFF[d][k][1]
                        if (ps >> coeff_shift) & 1:
                            tw[t] = 3
                        else:
                            tw[t] = 4 if k == 0 else 2
                        ts[t] = ps
                        tsh[t] = pshift
                        t += 1
                for sd in range(2):
                    for k in range(2):
                        for sgn in range(2):
                            toi[t] = DIR_OFF[(d + 2 + 4 * sd) & 7][k][0]
                            toj[t] = DIR_OFF[(d + 2 + 4 * sd) & 7][k][1]
                            if sgn:
                                toi[t] = -toi[t]
                                toj[t] = -toj[t]
                            tw[t] = 2 if k == 0 else 1
                            ts[t] = ss
                            tsh[t] = sshift
                            t += 1
                i0 = row0 + r * 8
                j0 = c * 8
                i_end = min(h, i0 + 8)
                j_end = min(w, j0 + 8)
                if i0 >= 2 and j0 >= 2 and i0 + 10 <= h and j0 + 10 <= w:
                    # interior unit: no bounds checks, 8 pixels of a row at a time
                    for t in range(12):
                        toff[t] = toi[t] * w + toj[t]
                    for i in range(i0, i0 + 8):
                        row = base + i * w + j0
                        for jj in range(8):
                            xs[jj] = row[jj]
                            acc[jj] = 0
                            los[jj] = xs[jj]
                            his[jj] = xs[jj]
                        for t in range(12):
                            for jj in range(8):
                                p = row[jj + toff[t]]
                                acc[jj] = acc[jj] + tw[t] * constrain(p - xs[jj], ts[t], tsh[t])
                                los[jj] = p if p < los[jj] else los[jj]
                                his[jj] = p if p > his[jj] else his[jj]
                        for jj in range(8):
                            out[i - row0, j0 + jj] = finish(xs[jj], acc[jj], los[jj], his[jj])
                    continue
                for i in range(i0, i_end):
                    for j in range(j0, j_end):
                        x = src[i, j]
                        total = 0
                        lo = x
                        hi = x
                        for t in range(12):
                            y = i + toi[t]
                            xx = j + toj[t]
                            if y < 0 or y >= h or xx < 0 or xx >= w:
                                continue
                            p = src[y, xx]
                            total = total + tw[t] * constrain(p - x, ts[t], tsh[t])
                            lo = p if p < lo else lo
                            hi = p if p > hi else hi
                        out[i - row0, j] = finish(x, total, lo, hi)
    return out_a


def filter_plane(src, dirs, pri, sec, damp, enabled, int coeff_shift):
    return filter_plane_rows(src, dirs, pri, sec, damp, enabled, coeff_shift, 0)


def _load_tables():
    from cdefkit.direction import LINE_TABLES
    from cdefkit.filter import DIRECTION_OFFSETS
    _init_tables(LINE_TABLES.factors, DIRECTION_OFFSETS)


_load_tables()
