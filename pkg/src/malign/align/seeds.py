"""Exact k-mer anchors, co-linear chaining and seed-and-extend local alignment."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .. import kernels
from .pairwise import (DEFAULT_CELL_BUDGET, PairwiseAlignment, ScoringParams, as_codes,
                       local_align_region)

DEFAULT_K = 15
DEFAULT_MAX_GAP = 100
DEFAULT_BAND = 32
DEFAULT_MAX_OCC = 64
CHAIN_LOOKBACK = 64


class Anchor(NamedTuple):
    a_pos: int
    b_pos: int
    length: int


@dataclass(frozen=True)
class Chain:
    anchors: tuple[Anchor, ...]
    score: int

    @property
    def a_start(self) -> int:
        return self.anchors[0].a_pos

    @property
    def a_end(self) -> int:
        last = self.anchors[-1]
        return last.a_pos + last.length

    @property
    def b_start(self) -> int:
        return self.anchors[0].b_pos

    @property
    def b_end(self) -> int:
        last = self.anchors[-1]
        return last.b_pos + last.length


def kmer_codes(codes: np.ndarray, k: int) -> np.ndarray:
    """2-bit packed integer for every k-mer start position."""
    if not 1 <= k <= 31:
        raise ValueError("k must be in [1, 31]")
    n = len(codes) - k + 1
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    c = codes.astype(np.int64)
    out = np.zeros(n, dtype=np.int64)
    for t in range(k):
        out = (out << 2) | c[t:t + n]
    return out


class KmerIndex:
    """Sorted k-mer table of one sequence, reusable across many queries."""

    def __init__(self, seq, k: int = DEFAULT_K):
        self.codes = as_codes(seq)
        self.k = k
        kmers = kmer_codes(self.codes, k)
        order = np.argsort(kmers, kind="stable")
        self.sorted = kmers[order]
        self.pos = order.astype(np.int64)

    def __len__(self) -> int:
        return len(self.codes)

    def lookup(self, query_kmers: np.ndarray, max_occ: int | None = DEFAULT_MAX_OCC):
        """``(a_pos, b_pos)`` arrays for every indexed hit of each query k-mer."""
        lo = np.searchsorted(self.sorted, query_kmers, side="left")
        hi = np.searchsorted(self.sorted, query_kmers, side="right")
        cnt = hi - lo
        ok = cnt > 0
        if max_occ is not None:
            ok &= cnt <= max_occ
        b_idx = np.nonzero(ok)[0]
        cnt = cnt[ok]
        total = int(cnt.sum())
        if total == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        first = np.repeat(lo[ok], cnt)
        within = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        a_pos = self.pos[first + within]
        b_pos = np.repeat(b_idx, cnt).astype(np.int64)
        return a_pos, b_pos


class SharedKmerIndex:
    """One sorted k-mer table over many sequences.

    Yields the anchors of every sequence pair from a single sort instead of
    one index lookup per pair.  A k-mer is ignored in any sequence where it
    occurs more than ``max_occ`` times.
    """

    def __init__(self, sequences, k: int = DEFAULT_K, max_occ: int | None = DEFAULT_MAX_OCC):
        self.k = k
        kmers = [kmer_codes(as_codes(s), k) for s in sequences]
        self.n_seqs = len(kmers)
        seq = np.concatenate([np.full(len(x), t, dtype=np.int64) for t, x in enumerate(kmers)]
                             + [np.zeros(0, dtype=np.int64)])
        pos = np.concatenate([np.arange(len(x), dtype=np.int64) for x in kmers]
                             + [np.zeros(0, dtype=np.int64)])
        km = np.concatenate(kmers + [np.zeros(0, dtype=np.int64)])
        o = np.lexsort((pos, seq, km))
        km, seq, pos = km[o], seq[o], pos[o]
        if max_occ is not None and len(km):
            key_start = np.ones(len(km), dtype=bool)
            key_start[1:] = (km[1:] != km[:-1]) | (seq[1:] != seq[:-1])
            gid = np.cumsum(key_start) - 1
            keep = np.bincount(gid)[gid] <= max_occ
            km, seq, pos = km[keep], seq[keep], pos[keep]
        self.kmers, self.seq, self.pos = km, seq, pos

    def pair_anchors(self):
        """``{(i, j): (pos_in_i, pos_in_j)}`` for all ``i < j`` sharing a k-mer."""
        km, seq, pos = self.kmers, self.seq, self.pos
        n = len(km)
        if n == 0:
            return {}
        start = np.ones(n, dtype=bool)
        start[1:] = km[1:] != km[:-1]
        first = np.nonzero(start)[0]
        size = np.diff(np.append(first, n))
        group_end = np.repeat(first + size, size)
        partners = group_end - np.arange(n) - 1
        total = int(partners.sum())
        if total == 0:
            return {}
        x = np.repeat(np.arange(n), partners)
        y = x + 1 + (np.arange(total) - np.repeat(np.cumsum(partners) - partners, partners))
        # entries are sorted by sequence within a k-mer group, so seq[x] <= seq[y]
        cross = seq[x] != seq[y]
        x, y = x[cross], y[cross]
        si, sj = seq[x], seq[y]
        key = si * self.n_seqs + sj
        o = np.lexsort((pos[y], pos[x], key))
        key, a_pos, b_pos = key[o], pos[x][o], pos[y][o]
        bounds = np.nonzero(np.diff(key))[0] + 1
        out = {}
        for lo, hi in zip(np.concatenate(([0], bounds)), np.concatenate((bounds, [len(key)]))):
            i, j = divmod(int(key[lo]), self.n_seqs)
            out[(i, j)] = (a_pos[lo:hi], b_pos[lo:hi])
        return out


def anchor_arrays(index: KmerIndex, b, max_occ: int | None = DEFAULT_MAX_OCC):
    b_codes = as_codes(b)
    a_pos, b_pos = index.lookup(kmer_codes(b_codes, index.k), max_occ)
    o = np.lexsort((b_pos, a_pos))
    return a_pos[o], b_pos[o]


def find_anchors(a, b, k: int = DEFAULT_K, max_occ: int | None = DEFAULT_MAX_OCC) -> list[Anchor]:
    """All exact shared k-mers between ``a`` and ``b``, via an index on ``a``.

    k-mers occurring more than ``max_occ`` times in ``a`` are skipped (repeat
    masking); pass ``None`` to keep everything.
    """
    if k < 8:
        raise ValueError("k must be at least 8")
    a_pos, b_pos = anchor_arrays(KmerIndex(a, k), b, max_occ)
    return [Anchor(int(x), int(y), k) for x, y in zip(a_pos, b_pos)]


def merge_runs(a_pos, b_pos, length):
    """Collapse overlapping same-diagonal anchors into maximal exact runs.

    Returns ``(a_start, b_start, length)`` sorted by ``(a_start, b_start)``.
    """
    a_pos = np.asarray(a_pos, dtype=np.int64)
    b_pos = np.asarray(b_pos, dtype=np.int64)
    length = np.broadcast_to(np.asarray(length, dtype=np.int64), a_pos.shape)
    if len(a_pos) == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    diag = b_pos - a_pos
    o = np.lexsort((a_pos, diag))
    a, d, ln = a_pos[o], diag[o], length[o]
    group_start = np.ones(len(a), dtype=bool)
    group_start[1:] = d[1:] != d[:-1]
    gid = np.cumsum(group_start) - 1
    span = int(a.max() + ln.max() + 1)
    end = a + ln + gid * span
    reach = np.maximum.accumulate(end)
    new = group_start.copy()
    new[1:] |= (a[1:] + gid[1:] * span) > reach[:-1]
    starts = np.nonzero(new)[0]
    run_a = a[starts]
    run_end = np.maximum.reduceat(a + ln, starts)
    run_b = run_a + d[starts]
    run_len = run_end - run_a
    o = np.lexsort((run_b, run_a))
    return run_a[o], run_b[o], run_len[o]


def chain_arrays(a_start, b_start, length, max_gap: int = DEFAULT_MAX_GAP):
    """Greedy extraction of co-linear chains from merged runs.

    Returns a list of index arrays into the run arrays, each in increasing
    order, best-scoring chain first.
    """
    n = len(a_start)
    if n == 0:
        return []
    score, pred = kernels.chain_dp(np.ascontiguousarray(a_start), np.ascontiguousarray(b_start),
                                   np.ascontiguousarray(length), int(max_gap), CHAIN_LOOKBACK)
    order = np.lexsort((a_start, -score))
    used = np.zeros(n, dtype=bool)
    chains = []
    for top in order:
        if used[top]:
            continue
        members = []
        i = int(top)
        while i >= 0 and not used[i]:
            used[i] = True
            members.append(i)
            i = int(pred[i])
        chains.append(np.array(members[::-1], dtype=np.int64))
    return chains


def chain_anchors(anchors: list[Anchor], max_gap: int = DEFAULT_MAX_GAP) -> list[Chain]:
    """Group anchors into maximal co-linear chains.

    Overlapping anchors on one diagonal are first merged, so anchors inside a
    chain never overlap.  A chain's score is its anchored length.
    """
    if not anchors:
        return []
    arr = np.array(anchors, dtype=np.int64)
    ra, rb, rl = merge_runs(arr[:, 0], arr[:, 1], arr[:, 2])
    chains = []
    for idx in chain_arrays(ra, rb, rl, max_gap):
        members = tuple(Anchor(int(ra[i]), int(rb[i]), int(rl[i])) for i in idx)
        chains.append(Chain(members, int(rl[idx].sum())))
    chains.sort(key=lambda c: (-c.score, c.a_start, c.b_start))
    return chains


def seeded_local_align(a, b, params: ScoringParams = ScoringParams(), k: int = DEFAULT_K,
                       min_score: int = 30, max_gap: int = DEFAULT_MAX_GAP,
                       band: int = DEFAULT_BAND, index: KmerIndex | None = None,
                       max_occ: int | None = DEFAULT_MAX_OCC,
                       cell_budget: int = DEFAULT_CELL_BUDGET) -> list[PairwiseAlignment]:
    """Local alignments of ``b`` against ``a`` found by seed-and-extend.

    Chains of exact k-mer anchors select regions (the chain's span widened
    by ``max_gap + band`` on each side); each region gets Smith-Waterman
    restricted to the chain's diagonals +/- ``band``, with repeated
    extraction as in ``local_align``.
    Alignments never overlap in ``a``.  A prebuilt ``index`` on ``a`` can be
    passed when ``a`` is queried repeatedly.
    """
    if index is None:
        index = KmerIndex(a, k)
    a_codes = index.codes
    b_codes = as_codes(b)
    m, n = len(a_codes), len(b_codes)
    a_pos, b_pos = anchor_arrays(index, b_codes, max_occ)
    if len(a_pos) == 0:
        return []
    ra, rb, rl = merge_runs(a_pos, b_pos, index.k)
    used = np.zeros(m, dtype=np.uint8)
    found: list[PairwiseAlignment] = []
    for idx in chain_arrays(ra, rb, rl, max_gap):
        # the ends may run anchor-free as far as chaining itself tolerates
        reach = max_gap + band
        a0 = max(0, int(ra[idx[0]]) - reach)
        a1 = min(m, int((ra[idx] + rl[idx]).max()) + reach)
        b0 = max(0, int(rb[idx[0]]) - reach)
        b1 = min(n, int((rb[idx] + rl[idx]).max()) + reach)
        mask = used[a0:a1].copy()
        if mask.all():
            continue
        diag = (rb[idx] - b0) - (ra[idx] - a0)
        lo, hi = int(diag.min()) - band, int(diag.max()) + band
        if (a1 - a0) * (hi - lo + 1) > cell_budget:
            raise RuntimeError(f"chain region {a0}:{a1} exceeds the DP budget")
        for aln in local_align_region(a_codes[a0:a1], b_codes[b0:b1], params,
                                      max(min_score, 1), lo, hi, mask):
            found.append(PairwiseAlignment(
                (aln.a_interval[0] + a0, aln.a_interval[1] + a0),
                (aln.b_interval[0] + b0, aln.b_interval[1] + b0),
                aln.a_aligned, aln.b_aligned, aln.score))
        used[a0:a1] = mask
    found.sort(key=lambda x: x.a_interval)
    return found
