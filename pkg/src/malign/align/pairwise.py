"""Affine-gap global and local pairwise alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..seqcodec import bases_to_codes, codes_to_bases

DEFAULT_CELL_BUDGET = 25_000_000

_GAP = ord("-")
_CODE_BYTES = np.frombuffer(b"ACGT", dtype=np.uint8)


class AlignmentBudgetError(RuntimeError):
    """The DP matrix would exceed the configured cell budget."""


@dataclass(frozen=True)
class ScoringParams:
    """Integer scores; a gap of length L scores ``gap_open + L * gap_extend``."""

    match: int = 1
    mismatch: int = -1
    gap_open: int = -2
    gap_extend: int = -1

    def __post_init__(self):
        if self.match <= 0:
            raise ValueError("match must be positive")
        if self.mismatch > 0 or self.gap_open > 0 or self.gap_extend > 0:
            raise ValueError("mismatch and gap penalties must be <= 0")
        if self.gap_extend < self.gap_open:
            raise ValueError("gap_extend must be >= gap_open")

    def gap(self, length: int) -> int:
        return self.gap_open + length * self.gap_extend if length else 0


@dataclass(frozen=True)
class PairwiseAlignment:
    a_interval: tuple[int, int]
    b_interval: tuple[int, int]
    a_aligned: str
    b_aligned: str
    score: int

    def __len__(self) -> int:
        return len(self.a_aligned)


def as_codes(seq) -> np.ndarray:
    if isinstance(seq, np.ndarray):
        return np.ascontiguousarray(seq, dtype=np.uint8)
    if hasattr(seq, "bases"):
        seq = seq.bases
    return bases_to_codes(seq)


def _render(a: np.ndarray, b: np.ndarray, a0: int, b0: int, ops: np.ndarray) -> tuple[str, str]:
    """Aligned strings for the ops produced by the kernel."""
    take_a = ops != 1
    take_b = ops != 2
    ai = a0 + np.cumsum(take_a) - 1
    bi = b0 + np.cumsum(take_b) - 1
    row_a = np.full(len(ops), _GAP, dtype=np.uint8)
    row_b = np.full(len(ops), _GAP, dtype=np.uint8)
    row_a[take_a] = _CODE_BYTES[a[ai[take_a]]]
    row_b[take_b] = _CODE_BYTES[b[bi[take_b]]]
    return row_a.tobytes().decode("ascii"), row_b.tobytes().decode("ascii")


def _run(a, b, params: ScoringParams, local: bool, diag_lo: int, diag_hi: int, mask=None):
    score, a0, a1, b0, b1, ops = kernels.align_dp(
        a, b, params.match, params.mismatch, params.gap_open, params.gap_extend,
        local, diag_lo, diag_hi, mask)
    if local and not len(ops):
        return None
    a_al, b_al = _render(a, b, a0, b0, ops)
    return PairwiseAlignment((a0, a1), (b0, b1), a_al, b_al, int(score))


def band_cells(m: int, n: int, diag_lo: int, diag_hi: int) -> int:
    i = np.arange(m + 1)
    width = np.minimum(i + diag_hi, n) - np.maximum(i + diag_lo, 0) + 1
    return int(np.clip(width, 0, None).sum())


def global_align(a, b, params: ScoringParams = ScoringParams(),
                 cell_budget: int = DEFAULT_CELL_BUDGET) -> PairwiseAlignment:
    """Optimal end-to-end alignment (Gotoh three-state DP).

    Ties in the traceback prefer an aligned column, then a gap in ``a``, then
    a gap in ``b``.
    """
    a, b = as_codes(a), as_codes(b)
    m, n = len(a), len(b)
    if (m + 1) * (n + 1) > cell_budget:
        raise AlignmentBudgetError(
            f"{m}x{n} exceeds the DP budget of {cell_budget} cells; "
            "use banded_global_align or seeded_local_align")
    return _run(a, b, params, False, -m, n)


def banded_global_align(a, b, params: ScoringParams = ScoringParams(), width: int = 32,
                        cell_budget: int = DEFAULT_CELL_BUDGET) -> PairwiseAlignment:
    """Global alignment restricted to diagonals within ``width`` of the
    corner-to-corner band.  Optimal whenever the optimum stays in the band."""
    a, b = as_codes(a), as_codes(b)
    m, n = len(a), len(b)
    lo = min(0, n - m) - width
    hi = max(0, n - m) + width
    if band_cells(m, n, lo, hi) > cell_budget:
        raise AlignmentBudgetError(f"banded {m}x{n} (width {width}) exceeds the DP budget")
    return _run(a, b, params, False, lo, hi)


def local_align(a, b, params: ScoringParams = ScoringParams(), min_score: int = 1,
                cell_budget: int = DEFAULT_CELL_BUDGET) -> list[PairwiseAlignment]:
    """Non-overlapping (in ``a``) local alignments scoring at least ``min_score``.

    Found greedily: the best Smith-Waterman alignment is taken, its ``a``
    interval is masked, and the DP is rerun on what remains.
    """
    a, b = as_codes(a), as_codes(b)
    m, n = len(a), len(b)
    if (m + 1) * (n + 1) > cell_budget:
        raise AlignmentBudgetError(
            f"{m}x{n} exceeds the DP budget of {cell_budget} cells; use seeded_local_align")
    return local_align_region(a, b, params, max(min_score, 1), -m, n, np.zeros(m, np.uint8))


def local_align_region(a, b, params, min_score, diag_lo, diag_hi, mask):
    """Repeated best-local extraction within a band; updates ``mask`` in place."""
    out = []
    while not mask.all():
        aln = _run(a, b, params, True, diag_lo, diag_hi, mask)
        if aln is None or aln.score < min_score:
            break
        out.append(aln)
        mask[aln.a_interval[0]:aln.a_interval[1]] = 1
    return out


def identity(aln: PairwiseAlignment) -> float:
    """Fraction of alignment columns that are matches."""
    if not len(aln):
        return 1.0
    x = np.frombuffer(aln.a_aligned.encode(), dtype=np.uint8)
    y = np.frombuffer(aln.b_aligned.encode(), dtype=np.uint8)
    return float(((x == y) & (x != _GAP)).mean())


__all__ = [
    "AlignmentBudgetError", "DEFAULT_CELL_BUDGET", "PairwiseAlignment", "ScoringParams",
    "as_codes", "banded_global_align", "codes_to_bases", "global_align", "identity",
    "local_align", "local_align_region",
]
