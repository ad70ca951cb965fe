"""Independent reference implementations used as test oracles.

The alignment oracle enumerates every set of aligned columns instead of
running a DP.  An alignment is fixed by the strictly increasing index pairs
it places in the same column; with affine gaps the best way to fill the
stretch between two consecutive columns is one gap run in each sequence, so
the optimum over all alignments equals the optimum of

    sum(substitution scores) + sum(g(gap run lengths))

over all such column sets, where ``g(0) = 0``.  For local alignment only the
runs between the first and last column count, and the empty alignment
scores 0.
"""
from functools import lru_cache
from itertools import combinations

import numpy as np


@lru_cache(maxsize=None)
def _combos(n, k):
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(combinations(range(n), k)), dtype=np.int64).reshape(-1, k)


def _gap(lengths, gap_open, gap_extend):
    return np.where(lengths > 0, gap_open + lengths * gap_extend, 0)


def _side_costs(idx, n, gap_open, gap_extend, local):
    """Gap cost contributed by one sequence for each column set in ``idx``."""
    if idx.shape[1] == 0:
        return _gap(np.full(len(idx), n), gap_open, gap_extend)
    inner = np.diff(idx, axis=1) - 1
    cost = _gap(inner, gap_open, gap_extend).sum(axis=1)
    if not local:
        cost = cost + _gap(idx[:, 0], gap_open, gap_extend)
        cost = cost + _gap(n - 1 - idx[:, -1], gap_open, gap_extend)
    return cost


def exhaustive_score(a: str, b: str, match=1, mismatch=-1, gap_open=-2, gap_extend=-1,
                     local=False) -> int:
    m, n = len(a), len(b)
    A = np.frombuffer(a.encode(), dtype=np.uint8)
    B = np.frombuffer(b.encode(), dtype=np.uint8)
    best = 0 if local else None
    for k in range(0, min(m, n) + 1):
        if local and k == 0:
            continue
        ia, ib = _combos(m, k), _combos(n, k)
        total = (_side_costs(ia, m, gap_open, gap_extend, local)[:, None]
                 + _side_costs(ib, n, gap_open, gap_extend, local)[None, :])
        for t in range(k):
            same = A[ia[:, t]][:, None] == B[ib[:, t]][None, :]
            total = total + np.where(same, match, mismatch)
        top = int(total.max())
        best = top if best is None else max(best, top)
    return best


def alignment_score(a_aligned: str, b_aligned: str, match=1, mismatch=-1, gap_open=-2,
                    gap_extend=-1) -> int:
    """Score an explicit alignment column by column."""
    score = 0
    state = None
    for x, y in zip(a_aligned, b_aligned):
        assert not (x == "-" and y == "-"), "gap/gap column"
        if x == "-" or y == "-":
            kind = "ga" if x == "-" else "gb"
            score += gap_extend + (gap_open if state != kind else 0)
            state = kind
        else:
            score += match if x == y else mismatch
            state = None
    return score


def hand_consensus(rows):
    """Column counts and consensus by plain dictionary counting."""
    n = len(rows)
    cons, counts = [], []
    for col in zip(*rows):
        c = {N: col.count(N) for N in "ACGT"}
        if 2 * col.count("-") > n:
            continue
        top = max(c.values())
        cons.append(min(N for N in "ACGT" if c[N] == top))
        counts.append([c[N] for N in "ACGT"])
    return "".join(cons), counts
