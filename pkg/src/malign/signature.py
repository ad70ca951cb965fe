"""Consensus sequences and conservation scores of aligned blocks."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .lcb.blocks import AlignmentBlock
from .seqcodec import ALPHABET, EncoderConfig

FASTA_NAME = "signature.fasta"
GAMMA_NAME = "signature.gamma"
_LETTERS = np.frombuffer(ALPHABET.encode(), dtype=np.uint8)


class SignatureError(ValueError):
    """Inconsistent or malformed signature files."""


@dataclass
class ConsensusBlock:
    """Consensus of one block.

    ``counts[i, N]`` is the number of rows carrying letter ``N`` (in ``ACGT``
    order) in the aligned column behind consensus position ``i``; the
    conservation score is ``counts / n_B``.
    """

    block_id: int
    consensus: str
    counts: np.ndarray
    n_B: int
    column_map: np.ndarray

    @property
    def gamma(self) -> np.ndarray:
        return self.counts / self.n_B

    def gamma_fraction(self, pos: int, letter: str) -> Fraction:
        return Fraction(int(self.counts[pos, ALPHABET.index(letter)]), self.n_B)

    def __len__(self) -> int:
        return len(self.consensus)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConsensusBlock):
            return NotImplemented
        return (self.block_id == other.block_id and self.consensus == other.consensus
                and self.n_B == other.n_B and np.array_equal(self.counts, other.counts)
                and np.array_equal(self.column_map, other.column_map))


@dataclass
class SignatureSet:
    family: str
    blocks: list[ConsensusBlock] = field(default_factory=list)
    encoder: EncoderConfig = EncoderConfig()

    def __post_init__(self):
        ids = [b.block_id for b in self.blocks]
        if ids != sorted(set(ids)):
            raise SignatureError("block ids must be unique and sorted")

    @property
    def m(self) -> int:
        return len(self.blocks)

    def block(self, block_id: int) -> ConsensusBlock:
        for b in self.blocks:
            if b.block_id == block_id:
                return b
        raise KeyError(block_id)


def build_consensus(block: AlignmentBlock) -> ConsensusBlock:
    """Per-column majority letter with conservation counts.

    Columns where gaps make up more than half the rows are dropped.  Ties go
    to the alphabetically first letter.
    """
    n = block.n_B
    if n == 0:
        return ConsensusBlock(block.block_id, "", np.zeros((0, 4), np.int64), 0,
                              np.zeros(0, np.int64))
    rows = np.array([np.frombuffer(r.aligned.encode(), dtype=np.uint8) for r in block.rows])
    counts = np.stack([(rows == c).sum(axis=0) for c in _LETTERS], axis=1).astype(np.int64)
    gaps = n - counts.sum(axis=1)
    keep = np.nonzero(2 * gaps <= n)[0]
    counts = counts[keep]
    consensus = _LETTERS[np.argmax(counts, axis=1)].tobytes().decode() if len(keep) else ""
    return ConsensusBlock(block.block_id, consensus, counts, n, keep.astype(np.int64))


def build_signature(family: str, blocks: list[AlignmentBlock],
                    encoder: EncoderConfig = EncoderConfig()) -> SignatureSet:
    cons = [build_consensus(b) for b in sorted(blocks, key=lambda b: b.block_id)]
    return SignatureSet(family, [c for c in cons if len(c)], encoder)


def save(signature: SignatureSet, path) -> None:
    """Write ``signature.fasta`` and the ``signature.gamma`` sidecar into ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    fasta = []
    gamma = [f"# family={signature.family}", f"# encoder={signature.encoder.fingerprint}",
             "# block_id pos gamma_A gamma_C gamma_G gamma_T column"]
    for b in signature.blocks:
        fasta.append(f">block_{b.block_id} n={b.n_B}")
        fasta.extend(b.consensus[i:i + 80] for i in range(0, len(b), 80))
        g = b.gamma
        for i in range(len(b)):
            gamma.append(f"{b.block_id} {i} {g[i, 0]:.6f} {g[i, 1]:.6f} {g[i, 2]:.6f} "
                         f"{g[i, 3]:.6f} {b.column_map[i]}")
    (path / FASTA_NAME).write_text("".join(x + "\n" for x in fasta))
    (path / GAMMA_NAME).write_text("".join(x + "\n" for x in gamma))


def _read_fasta_blocks(text: str):
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith(">"):
            parts = line[1:].split()
            try:
                if not parts[0].startswith("block_") or not parts[1].startswith("n="):
                    raise ValueError
                records.append([int(parts[0][6:]), int(parts[1][2:]), []])
            except (IndexError, ValueError):
                raise SignatureError(f"{FASTA_NAME} line {lineno}: bad header {line!r}") from None
        elif line.strip():
            if not records or set(line.strip()) - set(ALPHABET):
                raise SignatureError(f"{FASTA_NAME} line {lineno}: bad sequence line")
            records[-1][2].append(line.strip())
    return [(bid, n, "".join(chunks)) for bid, n, chunks in records]


def load(path) -> SignatureSet:
    path = Path(path)
    records = _read_fasta_blocks((path / FASTA_NAME).read_text())
    family, encoder = None, None
    rows: dict[int, list] = {}
    for lineno, line in enumerate((path / GAMMA_NAME).read_text().splitlines(), start=1):
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key == "family":
                family = value
            elif key == "encoder":
                encoder = EncoderConfig.from_fingerprint(value)
            continue
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 7:
            raise SignatureError(f"{GAMMA_NAME} line {lineno}: expected 7 fields")
        try:
            rows.setdefault(int(parts[0]), []).append(
                (int(parts[1]), [float(x) for x in parts[2:6]], int(parts[6])))
        except ValueError:
            raise SignatureError(f"{GAMMA_NAME} line {lineno}: bad number") from None
    if family is None or encoder is None:
        raise SignatureError(f"{GAMMA_NAME}: missing family or encoder header")
    if sorted(rows) != [bid for bid, _, _ in records]:
        raise SignatureError("block ids differ between FASTA and gamma files")
    blocks = []
    for bid, n, cons in records:
        entries = rows[bid]
        if len(entries) != len(cons) or [e[0] for e in entries] != list(range(len(cons))):
            raise SignatureError(f"block {bid}: gamma rows do not match consensus length")
        g = np.array([e[1] for e in entries], dtype=float).reshape(-1, 4)
        counts = np.rint(g * n).astype(np.int64)
        if np.abs(counts / n - g).max(initial=0) > 1e-5:
            raise SignatureError(f"block {bid}: gamma values are not multiples of 1/{n}")
        cmap = np.array([e[2] for e in entries], dtype=np.int64)
        blocks.append(ConsensusBlock(bid, cons, counts, n, cmap))
    return SignatureSet(family, blocks, encoder)
