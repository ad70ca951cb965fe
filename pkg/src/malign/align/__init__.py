"""Pairwise DP aligners and k-mer seed/chain machinery."""
from .pairwise import (DEFAULT_CELL_BUDGET, AlignmentBudgetError, PairwiseAlignment,
                       ScoringParams, banded_global_align, global_align, identity,
                       local_align)
from .seeds import (DEFAULT_BAND, DEFAULT_K, DEFAULT_MAX_GAP, Anchor, Chain, KmerIndex,
                    chain_anchors, find_anchors, kmer_codes, seeded_local_align)

__all__ = [
    "AlignmentBudgetError", "Anchor", "Chain", "DEFAULT_BAND", "DEFAULT_CELL_BUDGET",
    "DEFAULT_K", "DEFAULT_MAX_GAP", "KmerIndex", "PairwiseAlignment", "ScoringParams",
    "banded_global_align", "chain_anchors", "find_anchors", "global_align", "identity",
    "kmer_codes", "local_align", "seeded_local_align",
]
