"""Locally collinear blocks: discovery, multiple alignment, MAF/GFF output."""
from .blocks import (DEFAULT_MIN_BLOCK_LEN, DEFAULT_MIN_SUPPORT, AlignmentBlock, BlockRow,
                     align_block, build_blocks, choose_center, find_blocks)
from .formats import (MafError, format_gff, format_maf, parse_maf, read_maf, write_gff,
                      write_maf)

__all__ = [
    "AlignmentBlock", "BlockRow", "DEFAULT_MIN_BLOCK_LEN", "DEFAULT_MIN_SUPPORT", "MafError",
    "align_block", "build_blocks", "choose_center", "find_blocks", "format_gff", "format_maf",
    "parse_maf", "read_maf", "write_gff", "write_maf",
]
