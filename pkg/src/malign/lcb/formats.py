"""MAF and GFF3 serialisation of alignment blocks."""
from __future__ import annotations

from pathlib import Path

from .blocks import AlignmentBlock, BlockRow

GFF_SOURCE = "malign"
GFF_TYPE = "lcb"


class MafError(ValueError):
    """Malformed MAF input; the message names the offending line."""


def format_maf(blocks: list[AlignmentBlock]) -> str:
    if not blocks:
        return ""
    out = ["##maf version=1 program=malign", ""]
    for block in blocks:
        out.append(f"a score={block.n_B * block.l_B} id={block.block_id}")
        for r in block.rows:
            size = r.end - r.start
            out.append(f"s {r.seq_id} {r.start} {size} {r.strand} {r.src_size} {r.aligned}")
        out.append("")
    return "\n".join(out) + "\n"


def write_maf(blocks: list[AlignmentBlock], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_maf(blocks))


def parse_maf(text: str) -> list[AlignmentBlock]:
    blocks: list[AlignmentBlock] = []
    current: AlignmentBlock | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.strip()
        if not body or body.startswith("#"):
            current = None if not body else current
            continue
        fields = body.split()
        if fields[0] == "a":
            attrs = {}
            for f in fields[1:]:
                key, sep, value = f.partition("=")
                if not sep:
                    raise MafError(f"line {lineno}: bad attribute {f!r}")
                attrs[key] = value
            try:
                block_id = int(attrs.get("id", len(blocks) + 1))
            except ValueError:
                raise MafError(f"line {lineno}: bad block id") from None
            current = AlignmentBlock(block_id)
            blocks.append(current)
        elif fields[0] == "s":
            if current is None:
                raise MafError(f"line {lineno}: 's' line outside an alignment block")
            if len(fields) != 7:
                raise MafError(f"line {lineno}: expected 7 fields, got {len(fields)}")
            _, seq_id, start, size, strand, src_size, text_ = fields
            try:
                start_i, size_i, src_i = int(start), int(size), int(src_size)
            except ValueError:
                raise MafError(f"line {lineno}: non-integer coordinate") from None
            if strand not in "+-" or len(strand) != 1:
                raise MafError(f"line {lineno}: bad strand {strand!r}")
            if set(text_) - set("ACGT-"):
                raise MafError(f"line {lineno}: unexpected character in alignment text")
            if len(text_) - text_.count("-") != size_i:
                raise MafError(f"line {lineno}: size {size_i} does not match the "
                               f"gap-stripped text length {len(text_) - text_.count('-')}")
            if current.rows and len(current.rows[0].aligned) != len(text_):
                raise MafError(f"line {lineno}: row length differs from the block's")
            current.rows.append(BlockRow(seq_id, start_i, start_i + size_i, text_, src_i, strand))
        elif fields[0] in ("i", "e", "q"):
            continue
        else:
            raise MafError(f"line {lineno}: unknown line type {fields[0]!r}")
    return blocks


def read_maf(path) -> list[AlignmentBlock]:
    return parse_maf(Path(path).read_text())


def format_gff(blocks: list[AlignmentBlock]) -> str:
    out = ["##gff-version 3"]
    for block in blocks:
        for r in block.rows:
            out.append("\t".join([r.seq_id, GFF_SOURCE, GFF_TYPE, str(r.start + 1), str(r.end),
                                  str(block.n_B), r.strand, ".", f"ID={block.block_id}"]))
    return "\n".join(out) + "\n"


def write_gff(blocks: list[AlignmentBlock], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_gff(blocks))
