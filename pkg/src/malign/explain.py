"""Trace influential signature blocks back to byte ranges of the training samples."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .featurize import feature_names
from .model import FamilyModel, FingerprintError, names_fingerprint
from .seqcodec import NucleotideSequence, bytes_to_nucleotides
from .signature import SignatureSet


@dataclass(frozen=True)
class BlockRank:
    block_id: int
    weight: float
    mean_gamma: float


def top_blocks(model: FamilyModel, signature: SignatureSet, top_k: int = 10) -> list[BlockRank]:
    """Signature blocks ranked by the magnitude of their alignment-score weight.

    ``mean_gamma`` is the average conservation of the consensus letters.
    """
    if names_fingerprint(feature_names(signature)) != model.fingerprint:
        raise FingerprintError("model features do not match the signature blocks")
    ranks = []
    for t, block in enumerate(signature.blocks):
        g = block.gamma
        mean_gamma = float(g.max(axis=1).mean()) if len(block) else 0.0
        ranks.append(BlockRank(block.block_id, float(model.weights[2 * t]), mean_gamma))
    ranks.sort(key=lambda r: (-abs(r.weight), r.block_id))
    return ranks[:max(top_k, 0)]


@dataclass(frozen=True)
class Location:
    """Where one block row came from.

    ``segments`` are the contiguous byte ranges of the original file that
    hold the row's bases (more than one when the cleaner cut bytes out of the
    middle).  Encoding their concatenation and skipping ``phase`` bases gives
    the row.  Without an offset map the byte values are in cleaned
    coordinates and ``cleaned_coordinates`` is set.
    """

    block_id: int
    seq_id: str
    base_start: int
    base_end: int
    segments: tuple[tuple[int, int], ...]
    phase: int
    cleaned_coordinates: bool = False

    @property
    def byte_start(self) -> int:
        return self.segments[0][0] if self.segments else 0

    @property
    def byte_end(self) -> int:
        return self.segments[-1][1] if self.segments else 0


def byte_segments(base_start: int, base_end: int, offset_map) -> tuple[list[tuple[int, int]], int]:
    """Source byte ranges covering bases ``[base_start, base_end)``."""
    if base_end <= base_start:
        return [], 0
    first, last = base_start // 4, (base_end - 1) // 4   # cleaned byte indices
    phase = base_start % 4
    if not offset_map:
        return [(first, last + 1)], phase
    anchors = np.array(offset_map, dtype=np.int64)
    run_byte = anchors[:, 0] // 4        # cleaned byte index where each run starts
    run_src = anchors[:, 1]
    segments = []
    k = int(np.searchsorted(run_byte, first, side="right")) - 1
    pos = first
    while pos <= last:
        run_end = int(run_byte[k + 1]) if k + 1 < len(run_byte) else last + 1
        stop = min(last + 1, run_end)
        src0 = int(run_src[k]) + pos - int(run_byte[k])
        segments.append((src0, src0 + stop - pos))
        pos = stop
        k += 1
    return segments, phase


def locate(block_id: int, blocks, sequences) -> list[Location]:
    """Original-file byte ranges of every row of ``block_id``.

    ``blocks`` are read from the MAF of the same run and ``sequences`` maps
    sequence ids to :class:`NucleotideSequence` objects carrying offset maps.
    """
    match = [b for b in blocks if b.block_id == block_id]
    if not match:
        raise KeyError(f"block {block_id} is not in the alignment")
    if not isinstance(sequences, dict):
        sequences = {s.id: s for s in sequences}
    out = []
    for r in match[0].rows:
        seq = sequences.get(r.seq_id)
        omap = seq.offset_map if isinstance(seq, NucleotideSequence) else None
        segs, phase = byte_segments(r.start, r.end, omap)
        out.append(Location(block_id, r.seq_id, r.start, r.end, tuple(segs), phase,
                            cleaned_coordinates=not omap))
    return out


def reencode(loc: Location, original: bytes) -> str:
    """Bases of a located row recomputed from the original file bytes.

    ``original`` is addressed like the offset map: the raw file for binary
    input, the token stream for hexdumps, or the cleaned bytes when the
    location carries cleaned coordinates.
    """
    data = b"".join(original[a:b] for a, b in loc.segments)
    bases = bytes_to_nucleotides(data).bases
    return bases[loc.phase:loc.phase + loc.base_end - loc.base_start]


def write_trace(path, ranked: list[BlockRank], locations: dict[int, list[Location]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "block_id", "weight", "mean_gamma", "seq_id", "base_start",
                    "base_end", "byte_start", "byte_end", "segments", "cleaned_coordinates"])
        for n, r in enumerate(ranked, start=1):
            for loc in locations.get(r.block_id, []):
                segs = ";".join(f"{a}-{b}" for a, b in loc.segments)
                w.writerow([n, r.block_id, f"{r.weight:.6g}", f"{r.mean_gamma:.6f}", loc.seq_id,
                            loc.base_start, loc.base_end, loc.byte_start, loc.byte_end, segs,
                            int(loc.cleaned_coordinates)])
