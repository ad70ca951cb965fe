"""Synthetic malware families with planted conserved byte motifs.

Each positive sample is random filler with one point-mutated copy of every
family motif spliced in.  The placements are recorded so that block recovery,
featurisation and backtracking can be checked against known truth.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .seqcodec import RawSample

FILLER_JITTER = 0.1


@dataclass(frozen=True)
class Placement:
    sample_id: str
    offset: int
    length: int
    motif_id: int

    @property
    def end(self) -> int:
        return self.offset + self.length


@dataclass
class GroundTruth:
    family: str
    motifs: list[bytes]
    placements: list[Placement] = field(default_factory=list)

    def for_sample(self, sample_id: str) -> list[Placement]:
        return [p for p in self.placements if p.sample_id == sample_id]


def _random_bytes(rng: np.random.Generator, n: int) -> bytes:
    return rng.integers(0, 256, n, dtype=np.uint8).tobytes()


def point_mutate(data: bytes, rate: float, rng: np.random.Generator) -> bytes:
    """Replace each byte, with probability ``rate``, by a different random byte."""
    arr = np.frombuffer(data, dtype=np.uint8).copy()
    hit = rng.random(len(arr)) < rate
    # adding 1..255 mod 256 guarantees a different value
    arr[hit] = (arr[hit].astype(np.int64) + rng.integers(1, 256, int(hit.sum()))) % 256
    return arr.tobytes()


def _split(rng: np.random.Generator, total: int, parts: int) -> list[int]:
    cuts = np.sort(rng.integers(0, total + 1, parts - 1))
    return list(np.diff(np.concatenate(([0], cuts, [total]))).astype(int))


def _filler_len(rng, filler_len: int) -> int:
    return int(round(filler_len * rng.uniform(1 - FILLER_JITTER, 1 + FILLER_JITTER)))


def generate_family(seed: int, n_samples: int = 20, n_blocks: int = 5, block_len: int = 500,
                    mutation_rate: float = 0.02, filler_len: int = 50_000, shuffle: bool = True,
                    family: str = "family", motifs: list[bytes] | None = None):
    """Return ``(samples, truth)`` for one synthetic family.

    Filler length is jittered by up to 10% per sample and cut at random into
    ``n_blocks + 1`` segments with a motif copy between consecutive segments.
    Motif order is a fresh permutation per sample when ``shuffle`` is set.
    """
    if n_samples < 1 or n_blocks < 0 or block_len < 1 or filler_len < 0:
        raise ValueError("generator sizes must be positive")
    if not 0 <= mutation_rate <= 0.1:
        raise ValueError("mutation_rate must be in [0, 0.1]")
    rng = np.random.default_rng(seed)
    if motifs is None:
        motifs = [_random_bytes(rng, block_len) for _ in range(n_blocks)]
    truth = GroundTruth(family, list(motifs))
    samples = []
    for s in range(n_samples):
        sid = f"{family}_{s:03d}"
        order = rng.permutation(len(motifs)) if shuffle else np.arange(len(motifs))
        segments = _split(rng, _filler_len(rng, filler_len), len(motifs) + 1)
        parts = []
        pos = 0
        for t in range(len(motifs) + 1):
            chunk = _random_bytes(rng, segments[t])
            parts.append(chunk)
            pos += len(chunk)
            if t < len(motifs):
                mid = int(order[t])
                copy = point_mutate(motifs[mid], mutation_rate, rng)
                truth.placements.append(Placement(sid, pos, len(copy), mid))
                parts.append(copy)
                pos += len(copy)
        samples.append(RawSample(sid, b"".join(parts)))
    return samples, truth


def generate_negatives(seed: int, n_samples: int = 20, mean_len: int = 52_500,
                       prefix: str = "benign") -> list[RawSample]:
    """Pure random filler samples with the same length jitter as positives."""
    rng = np.random.default_rng(seed)
    return [RawSample(f"{prefix}_{s:03d}", _random_bytes(rng, _filler_len(rng, mean_len)))
            for s in range(n_samples)]


@dataclass
class SyntheticCorpus:
    families: dict[str, tuple[list[RawSample], GroundTruth]]
    negatives: list[RawSample]


def generate_corpus(seed: int, n_families: int = 3, n_samples: int = 20, n_negatives: int = 60,
                    **kw) -> SyntheticCorpus:
    """Several independent families plus a benign pool."""
    seeds = np.random.SeedSequence(seed).spawn(n_families + 1)
    families = {}
    for f in range(n_families):
        name = f"fam{f + 1}"
        fam_seed = int(seeds[f].generate_state(1)[0])
        families[name] = generate_family(fam_seed, n_samples, family=name, **kw)
    n_blocks = kw.get("n_blocks", 5)
    mean_len = kw.get("filler_len", 50_000) + n_blocks * kw.get("block_len", 500)
    neg_seed = int(seeds[-1].generate_state(1)[0])
    return SyntheticCorpus(families, generate_negatives(neg_seed, n_negatives, mean_len))


def reorder_motifs(sample: RawSample, placements: list[Placement], seed: int):
    """Permute the motif copies inside a sample, leaving filler in place.

    Returns the new sample and its updated placements.
    """
    rng = np.random.default_rng(seed)
    ps = sorted(placements, key=lambda p: p.offset)
    perm = rng.permutation(len(ps))
    data = sample.bytes
    pieces = []
    new_placements = []
    pos = 0
    cursor = 0
    for t, p in enumerate(ps):
        filler = data[cursor:p.offset]
        pieces.append(filler)
        pos += len(filler)
        src = ps[int(perm[t])]
        pieces.append(data[src.offset:src.end])
        new_placements.append(replace(src, offset=pos))
        pos += src.length
        cursor = p.end
    pieces.append(data[cursor:])
    return replace(sample, bytes=b"".join(pieces)), new_placements


def write_ground_truth(truth: GroundTruth | list[GroundTruth], path) -> None:
    truths = [truth] if isinstance(truth, GroundTruth) else truth
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "sample_id", "offset", "length", "motif_id"])
        for t in truths:
            for p in t.placements:
                w.writerow([t.family, p.sample_id, p.offset, p.length, p.motif_id])


def read_ground_truth(path) -> list[Placement]:
    with open(path, newline="") as fh:
        return [Placement(r["sample_id"], int(r["offset"]), int(r["length"]), int(r["motif_id"]))
                for r in csv.DictReader(fh)]


def motif_recovery(blocks, truth: GroundTruth, sequences) -> dict[int, float]:
    """Best single-block span coverage of every motif.

    For a motif and a block, coverage is the mean over all samples carrying
    the motif of the fraction of its bytes covered by that block's row in the
    sample (0 when the block has no row there).  Rows are mapped to source
    bytes through each sequence's offset map.
    """
    seqs = {s.id: s for s in sequences}
    by_motif: dict[int, list[Placement]] = {}
    for p in truth.placements:
        by_motif.setdefault(p.motif_id, []).append(p)
    result = {}
    for mid, places in sorted(by_motif.items()):
        best = 0.0
        for block in blocks:
            rows = {r.seq_id: r for r in block.rows}
            cov = 0.0
            for p in places:
                r = rows.get(p.sample_id)
                if r is None or r.end <= r.start:
                    continue
                seq = seqs[p.sample_id]
                b0 = seq.source_offset(r.start)
                b1 = seq.source_offset(r.end - 1) + 1
                cov += max(0, min(b1, p.end) - max(b0, p.offset)) / p.length
            best = max(best, cov / len(places))
        result[mid] = best
    return result
