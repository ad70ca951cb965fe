"""Binary / hexdump parsing, cleaning and the 2-bit nucleotide encoding."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ALPHABET = "ACGT"
DEFAULT_ZERO_RUN = 16
FASTA_WIDTH = 80

# "??" in a hexdump token stream
UNKNOWN = None

_HEX_TOKEN = re.compile(r"^[0-9A-Fa-f]{2}$")
_ADDRESS = re.compile(r"^[0-9A-Fa-f]+$")

_BASE_CODE = np.full(256, 255, dtype=np.uint8)
for _i, _c in enumerate(ALPHABET):
    _BASE_CODE[ord(_c)] = _i
_CODE_BASE = np.frombuffer(ALPHABET.encode("ascii"), dtype=np.uint8)


class CodecError(ValueError):
    """Raised for malformed hexdump, FASTA or nucleotide input."""


@dataclass(frozen=True)
class EncoderConfig:
    """Settings that must agree between a signature and the samples scored
    against it."""

    bit_order: str = "msb"
    zero_run: int = DEFAULT_ZERO_RUN

    @property
    def fingerprint(self) -> str:
        return f"{self.bit_order}:z{self.zero_run}"

    @classmethod
    def from_fingerprint(cls, text: str) -> "EncoderConfig":
        m = re.fullmatch(r"(msb):z(\d+)", text.strip())
        if not m:
            raise CodecError(f"bad encoder fingerprint {text!r}")
        return cls(bit_order=m.group(1), zero_run=int(m.group(2)))


@dataclass
class RawSample:
    id: str
    bytes: bytes
    origin: str = "binary"

    def __post_init__(self):
        if not self.id:
            raise ValueError("sample id must be non-empty")
        if self.origin not in ("binary", "hexdump"):
            raise ValueError(f"unknown origin {self.origin!r}")


@dataclass
class CleaningReport:
    removed_unknown: int = 0
    removed_zero_runs: int = 0
    retained: int = 0

    @property
    def total(self) -> int:
        return self.removed_unknown + self.removed_zero_runs + self.retained


@dataclass
class NucleotideSequence:
    """A cleaned sample as a string over ``ACGT``.

    ``offset_map`` holds ``(base_index, source_byte_offset)`` anchors, one at
    the start and one after every cut made by the cleaner, so any base can be
    traced back to its byte in the original file.
    """

    id: str
    bases: str
    offset_map: list[tuple[int, int]] | None = None
    encoder: EncoderConfig | None = None

    def __len__(self) -> int:
        return len(self.bases)

    @property
    def codes(self) -> np.ndarray:
        return bases_to_codes(self.bases)

    def source_offset(self, base_index: int) -> int:
        """Byte offset in the original file of the byte holding ``base_index``."""
        if not self.offset_map:
            return base_index // 4
        bases = [b for b, _ in self.offset_map]
        k = int(np.searchsorted(bases, base_index, side="right")) - 1
        if k < 0:
            raise IndexError(base_index)
        b0, s0 = self.offset_map[k]
        return s0 + (base_index - b0) // 4


def parse_hexdump(text: str, sample_id: str = "sample") -> tuple[RawSample, list[int | None]]:
    """Tokenise a ``.bytes`` hexdump.

    Each non-blank line is an address followed by two-digit hex tokens or
    ``??``.  Returns the sample (unknown tokens omitted from its bytes) and
    the full token list with ``None`` marking each ``??``.
    """
    tokens: list[int | None] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if not _ADDRESS.match(parts[0]):
            raise CodecError(f"line {lineno}: bad address {parts[0]!r}")
        for tok in parts[1:]:
            if tok == "??":
                tokens.append(UNKNOWN)
            elif _HEX_TOKEN.match(tok):
                tokens.append(int(tok, 16))
            else:
                raise CodecError(f"line {lineno}: bad token {tok!r}")
    data = bytes(t for t in tokens if t is not None)
    return RawSample(sample_id, data, origin="hexdump"), tokens


def _cuts_to_offset_map(kept_src: np.ndarray) -> list[tuple[int, int]]:
    if len(kept_src) == 0:
        return []
    breaks = np.nonzero(np.diff(kept_src) != 1)[0] + 1
    starts = np.concatenate(([0], breaks))
    return [(int(4 * k), int(kept_src[k])) for k in starts]


def clean_with_offsets(tokens, zero_run: int = DEFAULT_ZERO_RUN):
    """Like :func:`clean` but also returns the offset map of kept bytes."""
    if isinstance(tokens, (bytes, bytearray, memoryview)):
        arr = np.frombuffer(bytes(tokens), dtype=np.uint8).astype(np.int16)
    else:
        arr = np.array([-1 if t is None else t for t in tokens], dtype=np.int16)
    src = np.arange(len(arr), dtype=np.int64)
    known = arr >= 0
    removed_unknown = int((~known).sum())
    arr, src = arr[known], src[known]

    keep = np.ones(len(arr), dtype=bool)
    if zero_run > 0 and len(arr):
        is_zero = np.concatenate(([False], arr == 0, [False]))
        edges = np.diff(is_zero.astype(np.int8))
        run_starts = np.nonzero(edges == 1)[0]
        run_ends = np.nonzero(edges == -1)[0]
        for s, e in zip(run_starts, run_ends):
            if e - s >= zero_run:
                keep[s:e] = False
    removed_zero = int((~keep).sum())
    kept = arr[keep].astype(np.uint8)
    report = CleaningReport(removed_unknown, removed_zero, int(len(kept)))
    return kept.tobytes(), report, _cuts_to_offset_map(src[keep])


def clean(tokens, zero_run: int = DEFAULT_ZERO_RUN) -> tuple[bytes, CleaningReport]:
    """Drop ``??`` tokens, then every maximal run of at least ``zero_run`` 0x00
    bytes.

    ``tokens`` is a token list from :func:`parse_hexdump` or raw ``bytes``.
    Unknown tokens are removed first so runs split only by ``??`` are treated
    as one run; this keeps the operation idempotent.
    """
    data, report, _ = clean_with_offsets(tokens, zero_run)
    return data, report


def bytes_to_nucleotides(data: bytes, seq_id: str = "seq",
                         offset_map=None, encoder: EncoderConfig | None = None) -> NucleotideSequence:
    """Encode each byte as four bases, most significant bit pair first."""
    arr = np.frombuffer(bytes(data), dtype=np.uint8)
    pairs = np.empty((len(arr), 4), dtype=np.uint8)
    pairs[:, 0] = arr >> 6
    pairs[:, 1] = (arr >> 4) & 3
    pairs[:, 2] = (arr >> 2) & 3
    pairs[:, 3] = arr & 3
    bases = _CODE_BASE[pairs.ravel()].tobytes().decode("ascii")
    return NucleotideSequence(seq_id, bases, offset_map, encoder)


def bases_to_codes(bases: str) -> np.ndarray:
    codes = _BASE_CODE[np.frombuffer(bases.encode("ascii"), dtype=np.uint8)]
    if len(codes) and codes.max() == 255:
        bad = int(np.argmax(codes == 255))
        raise CodecError(f"non-ACGT character {bases[bad]!r} at position {bad}")
    return codes


def codes_to_bases(codes: np.ndarray) -> str:
    return _CODE_BASE[np.asarray(codes, dtype=np.uint8)].tobytes().decode("ascii")


def nucleotides_to_bytes(seq) -> bytes:
    bases = seq.bases if isinstance(seq, NucleotideSequence) else seq
    if len(bases) % 4:
        raise CodecError(f"sequence length {len(bases)} is not a multiple of 4")
    c = bases_to_codes(bases).reshape(-1, 4)
    out = (c[:, 0] << 6) | (c[:, 1] << 4) | (c[:, 2] << 2) | c[:, 3]
    return out.astype(np.uint8).tobytes()


def encode_sample(sample: RawSample, tokens=None,
                  encoder: EncoderConfig = EncoderConfig()) -> tuple[NucleotideSequence, CleaningReport]:
    """Clean and encode a sample.  Hexdump samples need their token list."""
    if sample.origin == "hexdump":
        if tokens is None:
            raise ValueError("hexdump samples need the parsed token list")
        src = tokens
    else:
        src = sample.bytes
    data, report, offsets = clean_with_offsets(src, encoder.zero_run)
    return bytes_to_nucleotides(data, sample.id, offsets, encoder), report


def load_sample(path, fmt: str = "auto") -> tuple[RawSample, list | None]:
    path = Path(path)
    if fmt == "auto":
        fmt = "bytes" if path.suffix == ".bytes" else "bin"
    if fmt == "bytes":
        return parse_hexdump(path.read_text(), path.stem)
    if fmt == "bin":
        return RawSample(path.stem, path.read_bytes(), "binary"), None
    raise ValueError(f"unknown input format {fmt!r}")


# -- FASTA -----------------------------------------------------------------

def format_fasta(sequences: Iterable[NucleotideSequence], width: int = FASTA_WIDTH) -> str:
    seen = set()
    out = []
    for seq in sequences:
        if seq.id in seen:
            raise CodecError(f"duplicate sequence id {seq.id!r}")
        seen.add(seq.id)
        header = f">{seq.id}"
        if seq.encoder is not None:
            header += f" encoder={seq.encoder.fingerprint}"
        out.append(header)
        for i in range(0, len(seq.bases), width):
            out.append(seq.bases[i:i + width])
    return "".join(line + "\n" for line in out)


def write_fasta(sequences: Iterable[NucleotideSequence], path, width: int = FASTA_WIDTH) -> None:
    text = format_fasta(sequences, width)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def parse_fasta(text: str, alphabet: str = ALPHABET) -> list[NucleotideSequence]:
    records: list[NucleotideSequence] = []
    header = None
    chunks: list[str] = []
    allowed = set(alphabet)
    offset = 0

    def flush():
        if header is None:
            return
        parts = header.split()
        if not parts:
            raise CodecError("empty FASTA header")
        encoder = None
        for p in parts[1:]:
            if p.startswith("encoder="):
                encoder = EncoderConfig.from_fingerprint(p[len("encoder="):])
        records.append(NucleotideSequence(parts[0], "".join(chunks), None, encoder))

    for line in text.splitlines(keepends=True):
        body = line.rstrip("\r\n")
        if body.startswith(">"):
            flush()
            header = body[1:]
            chunks = []
        elif body:
            if header is None:
                raise CodecError(f"sequence data before first header at offset {offset}")
            for k, ch in enumerate(body):
                if ch not in allowed:
                    raise CodecError(f"invalid character {ch!r} at offset {offset + k}")
            chunks.append(body)
        offset += len(line)
    flush()
    return records


def read_fasta(path) -> list[NucleotideSequence]:
    return parse_fasta(Path(path).read_text())


def read_fasta_dir(path) -> list[NucleotideSequence]:
    """All records from ``*.fasta``/``*.fa`` files in a directory, by file name."""
    path = Path(path)
    files = sorted(p for p in path.iterdir() if p.suffix in (".fasta", ".fa"))
    seqs: list[NucleotideSequence] = []
    for f in files:
        seqs.extend(read_fasta(f))
    offsets = path / "offsets.tsv"
    if offsets.exists():
        maps = read_offsets(offsets)
        for s in seqs:
            s.offset_map = maps.get(s.id)
    return seqs


# -- offset maps -------------------------------------------------------------

def write_offsets(sequences: Sequence[NucleotideSequence], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("seq_id\tbase_index\tbyte_offset\n")
        for s in sequences:
            for b, o in s.offset_map or []:
                fh.write(f"{s.id}\t{b}\t{o}\n")


def read_offsets(path) -> dict[str, list[tuple[int, int]]]:
    maps: dict[str, list[tuple[int, int]]] = {}
    with open(path) as fh:
        next(fh, None)
        for line in fh:
            if not line.strip():
                continue
            sid, b, o = line.rstrip("\n").split("\t")
            maps.setdefault(sid, []).append((int(b), int(o)))
    return maps
