# cython: language_level=3
"""Compiled affine-gap DP and anchor chaining.

Semantics are mirrored exactly by :mod:`malign.kernels._fallback`; any change
here has to be made there too (tests compare the two bit for bit).
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t

cnp.import_array()

cdef int64_t NEG = -(1LL << 60)

# state codes in traceback pointers
cdef enum:
    ST_M = 0
    ST_Y = 1      # gap in a (consumes b)
    ST_X = 2      # gap in b (consumes a)
    ST_START = 3


cdef inline int64_t clamp(int64_t v) noexcept nogil:
    return v if v > NEG else NEG


def align_dp(const uint8_t[::1] a, const uint8_t[::1] b,
             int64_t match, int64_t mismatch, int64_t gap_open, int64_t gap_extend,
             bint local, int64_t diag_lo, int64_t diag_hi,
             const uint8_t[::1] row_mask=None):
    """Return ``(score, a_start, a_end, b_start, b_end, ops)``.

    ``ops`` is a uint8 array: 0 aligned column, 1 gap in ``a``, 2 gap in ``b``.
    Cells with ``diag_lo <= j - i <= diag_hi`` are evaluated.
    """
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0]
    cdef Py_ssize_t i, j, jlo, jhi, total = 0
    cdef bint has_mask = row_mask is not None
    cdef int64_t oe = gap_open + gap_extend

    lo_arr = np.empty(m + 1, dtype=np.int64)
    hi_arr = np.empty(m + 1, dtype=np.int64)
    off_arr = np.empty(m + 1, dtype=np.int64)
    cdef int64_t[::1] row_lo = lo_arr, row_hi = hi_arr, row_off = off_arr
    for i in range(m + 1):
        jlo = i + diag_lo
        if jlo < 0:
            jlo = 0
        jhi = i + diag_hi
        if jhi > n:
            jhi = n
        row_lo[i] = jlo
        row_hi[i] = jhi
        row_off[i] = total
        if jhi >= jlo:
            total += jhi - jlo + 1

    tb_arr = np.zeros(max(total, 1), dtype=np.uint8)
    cdef uint8_t[::1] tb = tb_arr
    buf = np.full((6, n + 2), NEG, dtype=np.int64)
    cdef int64_t[:, ::1] rows = buf
    cdef int64_t[::1] Mp = rows[0], Xp = rows[1], Yp = rows[2]
    cdef int64_t[::1] Mc = rows[3], Xc = rows[4], Yc = rows[5]
    cdef int64_t[::1] tmp

    cdef int64_t best_score = 0, best, cand, s, v_m, v_x, v_y
    cdef Py_ssize_t best_i = -1, best_j = -1
    cdef uint8_t pm, px, py
    cdef bint masked

    with nogil:
        for i in range(m + 1):
            jlo = row_lo[i]
            jhi = row_hi[i]
            if 1 <= jlo <= n + 1:
                Mc[jlo - 1] = NEG
                Xc[jlo - 1] = NEG
                Yc[jlo - 1] = NEG
            masked = has_mask and i >= 1 and row_mask[i - 1] != 0
            for j in range(jlo, jhi + 1):
                pm = 0
                px = 0
                py = 0
                if masked:
                    Mc[j] = NEG
                    Xc[j] = NEG
                    Yc[j] = NEG
                    tb[row_off[i] + j - jlo] = 0
                    continue
                # aligned column
                if i == 0 or j == 0:
                    if i == 0 and j == 0 and not local:
                        v_m = 0
                    else:
                        v_m = NEG
                else:
                    best = Mp[j - 1]
                    pm = ST_M
                    if Yp[j - 1] > best:
                        best = Yp[j - 1]
                        pm = ST_Y
                    if Xp[j - 1] > best:
                        best = Xp[j - 1]
                        pm = ST_X
                    if local and best <= 0:
                        best = 0
                        pm = ST_START
                    s = match if a[i - 1] == b[j - 1] else mismatch
                    v_m = clamp(best + s)
                # gap in b: consumes a[i-1], comes from row i-1
                if i == 0:
                    v_x = NEG
                else:
                    best = Mp[j] + oe
                    px = ST_M
                    cand = Yp[j] + oe
                    if cand > best:
                        best = cand
                        px = ST_Y
                    cand = Xp[j] + gap_extend
                    if cand > best:
                        best = cand
                        px = ST_X
                    v_x = clamp(best)
                # gap in a: consumes b[j-1], comes from column j-1
                if j == 0:
                    v_y = NEG
                else:
                    best = Mc[j - 1] + oe
                    py = ST_M
                    cand = Yc[j - 1] + gap_extend
                    if cand > best:
                        best = cand
                        py = ST_Y
                    cand = Xc[j - 1] + oe
                    if cand > best:
                        best = cand
                        py = ST_X
                    v_y = clamp(best)
                Mc[j] = v_m
                Xc[j] = v_x
                Yc[j] = v_y
                tb[row_off[i] + j - jlo] = pm | (py << 2) | (px << 4)
                if local and i >= 1 and j >= 1 and v_m > best_score:
                    best_score = v_m
                    best_i = i
                    best_j = j
            if 0 <= jhi + 1 <= n:
                Mc[jhi + 1] = NEG
                Xc[jhi + 1] = NEG
                Yc[jhi + 1] = NEG
            tmp = Mp; Mp = Mc; Mc = tmp
            tmp = Xp; Xp = Xc; Xc = tmp
            tmp = Yp; Yp = Yc; Yc = tmp

    cdef int state
    cdef Py_ssize_t a_end, b_end
    if local:
        if best_i < 0:
            return 0, 0, 0, 0, 0, np.zeros(0, dtype=np.uint8)
        i = best_i
        j = best_j
        state = ST_M
        score = best_score
    else:
        # after the final swap the last row lives in Mp/Xp/Yp
        if row_lo[m] > n or row_hi[m] < n:
            raise ValueError("band does not contain the end cell")
        v_m = Mp[n]
        v_x = Xp[n]
        v_y = Yp[n]
        state = ST_M
        score = v_m
        if v_y > score:
            score = v_y
            state = ST_Y
        if v_x > score:
            score = v_x
            state = ST_X
        i = m
        j = n
    a_end = i
    b_end = j

    ops_arr = np.empty(m + n + 1, dtype=np.uint8)
    cdef uint8_t[::1] ops = ops_arr
    cdef Py_ssize_t n_ops = 0
    cdef uint8_t ptr, p
    while True:
        if not local and i == 0 and j == 0:
            break
        ptr = tb[row_off[i] + j - row_lo[i]]
        if state == ST_M:
            ops[n_ops] = 0
            n_ops += 1
            p = ptr & 3
            i -= 1
            j -= 1
            if p == ST_START:
                break
            state = p
        elif state == ST_Y:
            ops[n_ops] = 1
            n_ops += 1
            state = (ptr >> 2) & 3
            j -= 1
        else:
            ops[n_ops] = 2
            n_ops += 1
            state = (ptr >> 4) & 3
            i -= 1
    return int(score), int(i), int(a_end), int(j), int(b_end), ops_arr[:n_ops][::-1].copy()


def chain_dp(const int64_t[::1] a_start, const int64_t[::1] b_start,
             const int64_t[::1] length, int64_t max_gap, Py_ssize_t lookback):
    """Best-predecessor DP over anchors sorted by ``(a_start, b_start)``.

    Returns ``(score, pred)``; a chain's score is its total anchored length.
    """
    cdef Py_ssize_t n = a_start.shape[0], i, j, stop
    score_arr = np.empty(n, dtype=np.int64)
    pred_arr = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] score = score_arr
    cdef int64_t[::1] pred = pred_arr
    cdef int64_t max_len = 0, best, ga, gb, g
    for i in range(n):
        if length[i] > max_len:
            max_len = length[i]
    with nogil:
        for i in range(n):
            best = length[i]
            stop = i - lookback
            if stop < 0:
                stop = 0
            j = i - 1
            while j >= stop:
                if a_start[i] - a_start[j] > max_gap + max_len:
                    break
                ga = a_start[i] - (a_start[j] + length[j])
                gb = b_start[i] - (b_start[j] + length[j])
                if ga >= 0 and gb >= 0:
                    g = ga if ga > gb else gb
                    if g <= max_gap and score[j] + length[i] > best:
                        best = score[j] + length[i]
                        pred[i] = j
                j -= 1
            score[i] = best
    return score_arr, pred_arr
