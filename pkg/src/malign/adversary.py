"""Black-box evasion mutations and an evasion-rate harness."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .datagen import point_mutate
from .model import BENIGN, detect
from .seqcodec import EncoderConfig, RawSample, encode_sample

KINDS = ("pad_append", "intersperse", "shuffle_blocks", "substitute", "cross_family_inject")
DEFAULT_CHUNK = 4096
MAX_INSERTS = 16


@dataclass(frozen=True)
class MutationSpec:
    kind: str
    magnitude: float
    seed: int = 0
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown mutation kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not 0 < self.magnitude <= 1:
            raise ValueError("magnitude must be in (0, 1]")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")


def added_size(spec: MutationSpec, size: int) -> int:
    """``ceil(magnitude * size)``, immune to float noise such as 0.0125 * 100000."""
    return math.ceil(round(spec.magnitude * size, 9))


def shuffle_permutation(n_chunks: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n_chunks)


def _slice_from_pool(pool, n, rng):
    """``n`` contiguous bytes from a random pool member (wrapping if short)."""
    donor = pool[int(rng.integers(len(pool)))]
    data = donor.bytes if isinstance(donor, RawSample) else bytes(donor)
    if not data:
        raise ValueError("pool sample is empty")
    if len(data) < n:
        data = data * (n // len(data) + 1)
    start = int(rng.integers(0, len(data) - n + 1))
    return data[start:start + n]


def mutate(sample: RawSample, spec: MutationSpec, benign_pool=None, donor_pool=None) -> RawSample:
    """Apply one obfuscation to a sample; deterministic in ``(sample, spec)``."""
    data = sample.bytes
    if not data:
        raise ValueError("cannot mutate an empty sample")
    rng = np.random.default_rng(spec.seed)
    n_add = added_size(spec, len(data))

    if spec.kind == "pad_append":
        out = data + rng.integers(0, 256, n_add, dtype=np.uint8).tobytes()
    elif spec.kind in ("intersperse", "cross_family_inject"):
        pool = benign_pool if spec.kind == "intersperse" else donor_pool
        if not pool:
            raise ValueError(f"{spec.kind} needs a non-empty "
                             f"{'benign' if spec.kind == 'intersperse' else 'donor'} pool")
        n_chunks = 1 if spec.kind == "cross_family_inject" else min(n_add, MAX_INSERTS)
        sizes = [len(c) for c in np.array_split(np.arange(n_add), n_chunks)]
        cuts = np.sort(rng.integers(0, len(data) + 1, n_chunks))
        parts, prev = [], 0
        for cut, size in zip(cuts, sizes):
            parts.append(data[prev:cut])
            parts.append(_slice_from_pool(pool, size, rng))
            prev = int(cut)
        parts.append(data[prev:])
        out = b"".join(parts)
    elif spec.kind == "shuffle_blocks":
        chunks = [data[i:i + spec.chunk_size] for i in range(0, len(data), spec.chunk_size)]
        out = b"".join(chunks[int(i)] for i in rng.permutation(len(chunks)))
    else:  # substitute
        out = point_mutate(data, spec.magnitude, rng)
    return replace(sample, bytes=out, origin="binary")


@dataclass
class SpecResult:
    spec: MutationSpec
    evaded: int
    total: int

    @property
    def rate(self) -> float:
        return self.evaded / self.total if self.total else 0.0


@dataclass
class RobustnessReport:
    results: list[SpecResult] = field(default_factory=list)
    skipped: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "magnitude", "seed", "evaded", "total", "evasion_rate"])
            for r in self.results:
                w.writerow([r.spec.kind, r.spec.magnitude, r.spec.seed, r.evaded, r.total,
                            f"{r.rate:.4f}"])


def evaluate_robustness(families, samples, specs, benign_pool=None, donor_pools=None,
                        encoder: EncoderConfig = EncoderConfig()) -> RobustnessReport:
    """Evasion rate of every mutation spec over correctly detected samples.

    ``samples`` are ``(RawSample, family)`` pairs.  Samples that the
    unmutated pipeline does not already assign to their family are skipped.
    A mutated sample counts as evaded when it is no longer assigned to its
    family.  The i-th sample is mutated with seed ``spec.seed + i``.
    ``donor_pools`` maps a family to samples of *other* families used by
    ``cross_family_inject``.
    """
    families = list(families)

    def label(raw):
        seq, _ = encode_sample(replace(raw, origin="binary"), None, encoder)
        return detect(seq, families).label

    kept = [(raw, fam) for raw, fam in samples if label(raw) == fam]
    report = RobustnessReport(skipped=len(samples) - len(kept))
    for spec in specs:
        evaded = 0
        for i, (raw, fam) in enumerate(kept):
            donors = (donor_pools or {}).get(fam)
            mutated = mutate(raw, replace(spec, seed=spec.seed + i), benign_pool, donors)
            if label(mutated) != fam:
                evaded += 1
        report.results.append(SpecResult(spec, evaded, len(kept)))
    return report


__all__ = ["BENIGN", "KINDS", "MutationSpec", "RobustnessReport", "SpecResult", "added_size",
           "evaluate_robustness", "mutate", "shuffle_permutation"]
