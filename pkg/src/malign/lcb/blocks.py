"""Locally collinear block discovery and within-block multiple alignment."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..align.pairwise import (DEFAULT_CELL_BUDGET, AlignmentBudgetError, ScoringParams,
                              as_codes, banded_global_align, global_align)
from ..align.seeds import (DEFAULT_K, DEFAULT_MAX_GAP, DEFAULT_MAX_OCC, SharedKmerIndex,
                           chain_arrays, kmer_codes, merge_runs)

log = logging.getLogger(__name__)

DEFAULT_MIN_BLOCK_LEN = 200
DEFAULT_MIN_SUPPORT = 2
XDROP = 8
XDROP_WINDOW = 256
# share of the shorter interval two hits must overlap to be the same row
MERGE_OVERLAP = 0.5


@dataclass
class BlockRow:
    seq_id: str
    start: int
    end: int
    aligned: str
    src_size: int = 0
    strand: str = "+"

    @property
    def ungapped(self) -> str:
        return self.aligned.replace("-", "")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass
class AlignmentBlock:
    block_id: int
    rows: list[BlockRow] = field(default_factory=list)

    @property
    def n_B(self) -> int:
        return len(self.rows)

    @property
    def l_B(self) -> int:
        return max((len(r.aligned) for r in self.rows), default=0)

    @property
    def is_aligned(self) -> bool:
        lengths = {len(r.aligned) for r in self.rows}
        return len(lengths) <= 1

    def validate(self, sources: dict[str, str] | None = None) -> None:
        ids = [r.seq_id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise ValueError(f"block {self.block_id}: more than one row per sequence")
        if not self.is_aligned:
            raise ValueError(f"block {self.block_id}: rows differ in aligned length")
        for r in self.rows:
            if len(r.ungapped) != r.end - r.start:
                raise ValueError(f"block {self.block_id}: row {r.seq_id} length mismatch")
            if sources is not None and sources[r.seq_id][r.start:r.end] != r.ungapped:
                raise ValueError(f"block {self.block_id}: row {r.seq_id} differs from source")
        if self.rows:
            cols = np.array([list(r.aligned) for r in self.rows])
            if (cols == "-").all(axis=0).any():
                raise ValueError(f"block {self.block_id}: all-gap column")


def _xdrop(a: np.ndarray, b: np.ndarray) -> int:
    """Length of the best ungapped extension along ``a``/``b`` (+1/-1 scoring)."""
    L = min(len(a), len(b), XDROP_WINDOW)
    if L == 0:
        return 0
    s = np.where(a[:L] == b[:L], 1, -1).cumsum()
    peak = np.maximum.accumulate(np.maximum(s, 0))
    dropped = np.nonzero(s < peak - XDROP)[0]
    stop = int(dropped[0]) if len(dropped) else L
    if stop == 0:
        return 0
    best = int(np.argmax(s[:stop]))
    return best + 1 if s[best] > 0 else 0


def _extend(ca, cb, a0, a1, b0, b1):
    fwd = _xdrop(ca[a1:], cb[b1:])
    back = _xdrop(ca[:a0][::-1], cb[:b0][::-1])
    return a0 - back, a1 + fwd, b0 - back, b1 + fwd


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def pairwise_hits(ca, cb, a_pos, b_pos, k, min_block_len, max_gap):
    """Extended chain intervals shared by two sequences, from their anchors."""
    ra, rb, rl = merge_runs(a_pos, b_pos, k)
    hits = []
    for idx in chain_arrays(ra, rb, rl, max_gap):
        a0, b0 = int(ra[idx[0]]), int(rb[idx[0]])
        a1 = int((ra[idx] + rl[idx]).max())
        b1 = int((rb[idx] + rl[idx]).max())
        if max(a1 - a0, b1 - b0) + 2 * XDROP_WINDOW < min_block_len:
            continue
        a0, a1, b0, b1 = _extend(ca, cb, a0, a1, b0, b1)
        if min(a1 - a0, b1 - b0) >= min_block_len:
            hits.append((a0, a1, b0, b1))
    return hits


def find_blocks(sequences, k: int = DEFAULT_K, min_block_len: int = DEFAULT_MIN_BLOCK_LEN,
                min_support: int = DEFAULT_MIN_SUPPORT, max_gap: int = DEFAULT_MAX_GAP,
                max_occ: int | None = DEFAULT_MAX_OCC) -> list[AlignmentBlock]:
    """Blocks of sequence shared by at least ``min_support`` inputs.

    Every pair of sequences is compared by chaining exact k-mer anchors, so a
    block is found wherever it sits in each sequence.  Overlapping hits on
    the same sequence are merged into one row, and connected hits across
    sequences form a block.  Rows are returned unaligned (raw substrings);
    see :func:`align_block`.
    """
    seqs = list(sequences)
    if len(seqs) < 2:
        raise ValueError("find_blocks needs at least two sequences")
    ids = [s.id for s in seqs]
    if len(set(ids)) != len(ids):
        raise ValueError("sequence ids must be unique")
    codes = [as_codes(s) for s in seqs]
    anchors = SharedKmerIndex(codes, k, max_occ).pair_anchors()

    intervals: list[tuple[int, int, int]] = []   # (seq, start, end)
    links: list[tuple[int, int]] = []
    for (i, j), (a_pos, b_pos) in sorted(anchors.items()):
        for a0, a1, b0, b1 in pairwise_hits(codes[i], codes[j], a_pos, b_pos, k,
                                            min_block_len, max_gap):
            intervals.append((i, a0, a1))
            intervals.append((j, b0, b1))
            links.append((len(intervals) - 2, len(intervals) - 1))
    if not intervals:
        return []

    # merge overlapping hits within each sequence into candidate rows
    cluster_of = np.empty(len(intervals), dtype=np.int64)
    clusters: list[list[int]] = []   # [seq, start, end]
    order = sorted(range(len(intervals)), key=lambda t: intervals[t])
    current = None
    for t in order:
        s, a0, a1 = intervals[t]
        if current is not None:
            cs, c0, c1 = clusters[current]
            overlap = min(a1, c1) - max(a0, c0)
            if cs == s and overlap >= MERGE_OVERLAP * min(a1 - a0, c1 - c0):
                clusters[current][2] = max(c1, a1)
                cluster_of[t] = current
                continue
        clusters.append([s, a0, a1])
        current = len(clusters) - 1
        cluster_of[t] = current

    uf = _UnionFind(len(clusters))
    for x, y in links:
        uf.union(int(cluster_of[x]), int(cluster_of[y]))
    components: dict[int, list[int]] = {}
    for c in range(len(clusters)):
        components.setdefault(uf.find(c), []).append(c)

    raw_blocks: list[list[list[int]]] = []
    for members in components.values():
        by_seq: dict[int, list[list[int]]] = {}
        for c in members:
            by_seq.setdefault(clusters[c][0], []).append(clusters[c])
        depth = max(len(v) for v in by_seq.values())
        for layer in range(depth):   # paralogous copies go to separate blocks
            rows = [sorted(v, key=lambda r: r[1])[layer] for v in by_seq.values() if len(v) > layer]
            raw_blocks.append([list(r) for r in rows])

    # rows from different blocks must not overlap on a sequence
    per_seq: dict[int, list[list[int]]] = {}
    for rows in raw_blocks:
        for r in rows:
            per_seq.setdefault(r[0], []).append(r)
    for rows in per_seq.values():
        rows.sort(key=lambda r: (r[1], -r[2]))
        reach = -1
        for r in rows:
            if r[1] < reach:
                r[1] = reach
            reach = max(reach, r[2])

    blocks = []
    for rows in raw_blocks:
        kept = sorted((r for r in rows if r[2] - r[1] >= min_block_len), key=lambda r: r[0])
        if len(kept) >= min_support:
            blocks.append(kept)
    blocks.sort(key=lambda rows: (rows[0][0], rows[0][1]))

    out = []
    for n, rows in enumerate(blocks, start=1):
        out.append(AlignmentBlock(n, [
            BlockRow(ids[s], a0, a1, seqs[s].bases[a0:a1], len(seqs[s].bases))
            for s, a0, a1 in rows]))
    return out


def _kmer_set(codes: np.ndarray, k: int) -> np.ndarray:
    return np.unique(kmer_codes(codes, k))


def choose_center(rows: list[str], k: int = 8) -> int:
    """Row with the smallest summed k-mer distance to all others."""
    sets = [_kmer_set(as_codes(r), k) for r in rows]
    n = len(rows)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            denom = min(len(sets[i]), len(sets[j]))
            if denom == 0:
                d = float(len(rows[i]) != len(rows[j]))
            else:
                d = 1.0 - len(np.intersect1d(sets[i], sets[j], assume_unique=True)) / denom
            dist[i, j] = dist[j, i] = d
    return int(np.argmin(dist.sum(axis=1)))


def align_block(block: AlignmentBlock, params: ScoringParams = ScoringParams(),
                cell_budget: int = DEFAULT_CELL_BUDGET, band: int = 64) -> AlignmentBlock:
    """Center-star multiple alignment of a block's rows.

    Every row is globally aligned to the center row and the insertions of all
    pairwise alignments are merged.  Pairs too large for full DP fall back to
    a banded alignment; if that also exceeds the budget the row is dropped.
    """
    rows = [replace(r, aligned=r.ungapped) for r in block.rows]
    if len(rows) < 2:
        return AlignmentBlock(block.block_id, rows)
    seqs = [r.aligned for r in rows]
    center = choose_center(seqs)
    c_seq = seqs[center]
    L = len(c_seq)

    kept = []
    pair = {}
    for t, s in enumerate(seqs):
        if t == center:
            kept.append(t)
            continue
        try:
            try:
                aln = global_align(c_seq, s, params, cell_budget)
            except AlignmentBudgetError:
                aln = banded_global_align(c_seq, s, params, band, cell_budget)
        except AlignmentBudgetError as exc:
            log.warning("block %d: dropping row %s (%s)", block.block_id, rows[t].seq_id, exc)
            continue
        kept.append(t)
        pair[t] = aln

    # per row: inserted characters before each center position, and the
    # character aligned to each center position
    inserts = {}
    columns = {}
    width = np.zeros(L + 1, dtype=np.int64)
    for t, aln in pair.items():
        ins = [[] for _ in range(L + 1)]
        col = ["-"] * L
        p = 0
        for x, y in zip(aln.a_aligned, aln.b_aligned):
            if x == "-":
                ins[p].append(y)
            else:
                col[p] = y
                p += 1
        inserts[t] = ins
        columns[t] = col
        width = np.maximum(width, [len(v) for v in ins])

    def render(t):
        parts = []
        for p in range(L + 1):
            g = int(width[p])
            if t == center:
                parts.append("-" * g)
            else:
                ins = inserts[t][p]
                parts.append("".join(ins) + "-" * (g - len(ins)))
            if p < L:
                parts.append(c_seq[p] if t == center else columns[t][p])
        return "".join(parts)

    out_rows = [replace(rows[t], aligned=render(t)) for t in kept]
    return AlignmentBlock(block.block_id, out_rows)


def build_blocks(sequences, k: int = DEFAULT_K, min_block_len: int = DEFAULT_MIN_BLOCK_LEN,
                 min_support: int = DEFAULT_MIN_SUPPORT, params: ScoringParams = ScoringParams(),
                 **kw) -> list[AlignmentBlock]:
    """:func:`find_blocks` followed by :func:`align_block` on every block."""
    blocks = [align_block(b, params) for b in find_blocks(sequences, k, min_block_len,
                                                          min_support, **kw)]
    return [b for b in blocks if b.n_B >= min_support]
