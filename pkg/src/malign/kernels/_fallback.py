"""Pure numpy implementations of the DP kernels.

Row-vectorised versions of the loops in ``_dpcore.pyx`` using the same banded
storage layout.  Results, including tie-breaking, are identical; only the
speed differs.
"""
import numpy as np

NEG = -(1 << 60)

ST_M, ST_Y, ST_X, ST_START = 0, 1, 2, 3


def _pick3(c0, c1, c2):
    """Elementwise max of three candidates, preferring the earliest on ties."""
    best = c0.copy()
    ptr = np.zeros(best.shape, dtype=np.uint8)
    sel = c1 > best
    best[sel] = c1[sel]
    ptr[sel] = 1
    sel = c2 > best
    best[sel] = c2[sel]
    ptr[sel] = 2
    return best, ptr


def _row_bounds(m, n, diag_lo, diag_hi):
    i = np.arange(m + 1, dtype=np.int64)
    lo = np.maximum(i + diag_lo, 0)
    hi = np.minimum(i + diag_hi, n)
    width = np.maximum(hi - lo + 1, 0)
    off = np.concatenate(([0], np.cumsum(width)[:-1]))
    return lo, hi, off, int(width.sum())


def align_dp(a, b, match, mismatch, gap_open, gap_extend, local,
             diag_lo, diag_hi, row_mask=None):
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    m, n = len(a), len(b)
    oe = gap_open + gap_extend
    row_lo, row_hi, row_off, total = _row_bounds(m, n, diag_lo, diag_hi)
    tb = np.zeros(max(total, 1), dtype=np.uint8)
    rows = np.full((6, n + 2), NEG, dtype=np.int64)
    Mp, Xp, Yp, Mc, Xc, Yc = rows
    best_score, best_i, best_j = 0, -1, -1

    for i in range(m + 1):
        jlo, jhi = int(row_lo[i]), int(row_hi[i])
        if 1 <= jlo <= n + 1:
            Mc[jlo - 1] = Xc[jlo - 1] = Yc[jlo - 1] = NEG
        if jhi >= jlo:
            sl = slice(jlo, jhi + 1)
            w = jhi - jlo + 1
            if i >= 1 and row_mask is not None and row_mask[i - 1]:
                Mc[sl] = NEG
                Xc[sl] = NEG
                Yc[sl] = NEG
                tb[row_off[i]:row_off[i] + w] = 0
            else:
                pm = np.zeros(w, dtype=np.uint8)
                px = np.zeros(w, dtype=np.uint8)
                M = np.full(w, NEG, dtype=np.int64)
                # aligned column, defined for j >= 1 and i >= 1
                j0 = max(jlo, 1)
                if i == 0:
                    if jlo == 0 and not local:
                        M[0] = 0
                elif j0 <= jhi:
                    best, ptr = _pick3(Mp[j0 - 1:jhi], Yp[j0 - 1:jhi], Xp[j0 - 1:jhi])
                    if local:
                        fresh = best <= 0
                        best[fresh] = 0
                        ptr[fresh] = ST_START
                    s = np.where(b[j0 - 1:jhi] == a[i - 1], match, mismatch)
                    M[j0 - jlo:] = np.maximum(best + s, NEG)
                    pm[j0 - jlo:] = ptr
                if i == 0:
                    X = np.full(w, NEG, dtype=np.int64)
                else:
                    X, px = _pick3(Mp[sl] + oe, Yp[sl] + oe, Xp[sl] + gap_extend)
                    X = np.maximum(X, NEG)
                # gap in a: Y[j] = max_{jlo<=k<j} P[k] + (j-1-k)*ext, P = max(M, X) + oe
                ramp = np.arange(w, dtype=np.int64) * gap_extend
                run = np.maximum.accumulate(np.maximum(M, X) + oe - ramp)
                Y = np.full(w, NEG, dtype=np.int64)
                if w > 1:
                    Y[1:] = np.maximum(run[:-1] + ramp[:-1], NEG)
                # pointers for Y read the previous column, including the NEG boundary
                edge = jlo - 1 if jlo >= 1 else None
                prevM = np.concatenate(([NEG if edge is None else Mc[edge]], M[:-1]))
                prevX = np.concatenate(([NEG if edge is None else Xc[edge]], X[:-1]))
                prevY = np.concatenate(([NEG if edge is None else Yc[edge]], Y[:-1]))
                _, py = _pick3(prevM + oe, prevY + gap_extend, prevX + oe)
                if jlo == 0:
                    py[0] = 0
                Mc[sl] = M
                Xc[sl] = X
                Yc[sl] = Y
                tb[row_off[i]:row_off[i] + w] = pm | (py << 2) | (px << 4)
                if local and i >= 1 and j0 <= jhi:
                    seg = M[j0 - jlo:]
                    k = int(np.argmax(seg))
                    if seg[k] > best_score:
                        best_score, best_i, best_j = int(seg[k]), i, j0 + k
        if 0 <= jhi + 1 <= n:
            Mc[jhi + 1] = Xc[jhi + 1] = Yc[jhi + 1] = NEG
        Mp, Mc = Mc, Mp
        Xp, Xc = Xc, Xp
        Yp, Yc = Yc, Yp

    if local:
        if best_i < 0:
            return 0, 0, 0, 0, 0, np.zeros(0, dtype=np.uint8)
        i, j, state, score = best_i, best_j, ST_M, best_score
    else:
        if row_lo[m] > n or row_hi[m] < n:
            raise ValueError("band does not contain the end cell")
        score, state = int(Mp[n]), ST_M
        if int(Yp[n]) > score:
            score, state = int(Yp[n]), ST_Y
        if int(Xp[n]) > score:
            score, state = int(Xp[n]), ST_X
        i, j = m, n
    a_end, b_end = i, j

    ops = []
    while True:
        if not local and i == 0 and j == 0:
            break
        ptr = int(tb[row_off[i] + j - row_lo[i]])
        if state == ST_M:
            ops.append(0)
            p = ptr & 3
            i -= 1
            j -= 1
            if p == ST_START:
                break
            state = p
        elif state == ST_Y:
            ops.append(1)
            state = (ptr >> 2) & 3
            j -= 1
        else:
            ops.append(2)
            state = (ptr >> 4) & 3
            i -= 1
    return score, i, a_end, j, b_end, np.array(ops[::-1], dtype=np.uint8)


def chain_dp(a_start, b_start, length, max_gap, lookback):
    a_start = np.asarray(a_start, dtype=np.int64)
    b_start = np.asarray(b_start, dtype=np.int64)
    length = np.asarray(length, dtype=np.int64)
    n = len(a_start)
    score = np.empty(n, dtype=np.int64)
    pred = np.full(n, -1, dtype=np.int64)
    max_len = int(length.max()) if n else 0
    a_end = a_start + length
    b_end = b_start + length
    for i in range(n):
        best = int(length[i])
        lo = max(0, i - lookback)
        # the downward scan stops at the first anchor that is too far left
        far = np.nonzero(a_start[i] - a_start[lo:i] > max_gap + max_len)[0]
        if len(far):
            lo += int(far[-1]) + 1
        if lo < i:
            ga = a_start[i] - a_end[lo:i]
            gb = b_start[i] - b_end[lo:i]
            ok = (ga >= 0) & (gb >= 0) & (np.maximum(ga, gb) <= max_gap)
            cand = np.where(ok, score[lo:i] + length[i], -1)
            rev = cand[::-1]   # latest predecessor wins ties
            k = int(np.argmax(rev))
            if rev[k] > best:
                best = int(rev[k])
                pred[i] = i - 1 - k
        score[i] = best
    return score, pred
