import numpy as np
import pytest
from hypothesis import given, strategies as st

from malign.seqcodec import (CodecError, EncoderConfig, NucleotideSequence, RawSample,
                             bytes_to_nucleotides, clean, clean_with_offsets, encode_sample,
                             format_fasta, load_sample, nucleotides_to_bytes, parse_fasta,
                             parse_hexdump, read_fasta, read_fasta_dir, read_offsets,
                             write_fasta, write_offsets)


def test_hexdump_tokens():
    _, tokens = parse_hexdump("00401000 4D 5A 90")
    assert tokens == [0x4D, 0x5A, 0x90]


def test_hexdump_keeps_unknown_marker():
    raw, tokens = parse_hexdump("00401000 ?? ?? 4D")
    assert tokens == [None, None, 0x4D]
    assert raw.bytes == b"\x4d"
    assert raw.origin == "hexdump"


def test_hexdump_bad_digit_names_line():
    with pytest.raises(CodecError, match="line 1"):
        parse_hexdump("00401000 4G")
    with pytest.raises(CodecError, match="line 2"):
        parse_hexdump("00401000 4D\n00401010 ABC\n")


def test_clean_drops_unknown():
    data, rep = clean([0x4D, None, 0x5A])
    assert data == b"\x4d\x5a"
    assert rep.removed_unknown == 1


def test_clean_zero_run_at_threshold():
    data, rep = clean(b"\xaa" + b"\x00" * 16 + b"\xbb", 16)
    assert data == b"\xaa\xbb"
    assert rep.removed_zero_runs == 16


def test_clean_short_zero_run_kept():
    data, rep = clean(b"\xaa\x00\x00\xbb", 16)
    assert data == b"\xaa\x00\x00\xbb"
    assert rep.removed_zero_runs == 0


def test_clean_run_split_by_unknown_counts_as_one():
    tokens = [0xAA] + [0] * 8 + [None] + [0] * 8 + [0xBB]
    data, rep = clean(tokens, 16)
    assert data == b"\xaa\xbb"
    assert (rep.removed_unknown, rep.removed_zero_runs, rep.retained) == (1, 16, 2)


def test_encoding_examples():
    assert bytes_to_nucleotides(b"\x1b").bases == "ACGT"
    assert bytes_to_nucleotides(b"\x00").bases == "AAAA"
    assert bytes_to_nucleotides(b"\xff").bases == "TTTT"
    assert nucleotides_to_bytes("ACGT") == b"\x1b"
    assert nucleotides_to_bytes("AAAA") == b"\x00"
    with pytest.raises(CodecError):
        nucleotides_to_bytes("ACG")


@given(st.binary(max_size=512))
def test_encoding_bijection_and_length(data):
    seq = bytes_to_nucleotides(data)
    assert len(seq.bases) == 4 * len(data)
    assert set(seq.bases) <= set("ACGT")
    assert nucleotides_to_bytes(seq) == data


zero_heavy = st.lists(st.one_of(st.just(0), st.just(None), st.integers(0, 255)), max_size=300)


@given(zero_heavy, st.integers(1, 20))
def test_clean_idempotent_and_report_consistent(tokens, z):
    data, rep = clean(tokens, z)
    assert rep.total == len(tokens)
    assert rep.retained == len(data)
    again, rep2 = clean(data, z)
    assert again == data
    assert rep2.removed_zero_runs == 0


@given(zero_heavy, st.integers(1, 20))
def test_offset_map_points_at_source_bytes(tokens, z):
    data, _, omap = clean_with_offsets(tokens, z)
    seq = bytes_to_nucleotides(data, "s", omap)
    bases = [b for b, _ in omap]
    srcs = [s for _, s in omap]
    assert bases == sorted(set(bases)) and srcs == sorted(set(srcs))
    for i in range(0, len(seq.bases), 4):
        assert tokens[seq.source_offset(i)] == data[i // 4]


def test_zero_run_cut_shifts_offsets():
    raw = RawSample("x", b"\x11" * 4 + b"\x00" * 16 + b"\x22" * 4)
    seq, rep = encode_sample(raw)
    assert rep.removed_zero_runs == 16
    assert seq.offset_map == [(0, 0), (16, 20)]
    assert seq.source_offset(16) == 20


def test_fasta_small_roundtrip(tmp_path):
    path = tmp_path / "a.fasta"
    write_fasta([NucleotideSequence("s1", "GATT")], path)
    assert path.read_text() == ">s1\nGATT\n"
    back = read_fasta(path)
    assert [(s.id, s.bases) for s in back] == [("s1", "GATT")]


def test_fasta_wraps_at_80():
    text = format_fasta([NucleotideSequence("s", "ACGT" * 50)])
    lines = text.splitlines()
    assert [len(x) for x in lines[1:]] == [80, 80, 40]
    assert parse_fasta(text)[0].bases == "ACGT" * 50


def test_fasta_rejects_n_with_offset():
    with pytest.raises(CodecError, match="offset 6"):
        parse_fasta(">s1\nGANT\n")


def test_fasta_duplicate_ids():
    with pytest.raises(CodecError, match="duplicate"):
        format_fasta([NucleotideSequence("s", "A"), NucleotideSequence("s", "C")])


def test_fasta_carries_encoder():
    enc = EncoderConfig(zero_run=8)
    back = parse_fasta(format_fasta([NucleotideSequence("s", "ACGT", encoder=enc)]))
    assert back[0].encoder == enc


ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789_", min_size=1, max_size=12)


@given(st.dictionaries(ids, st.text(alphabet="ACGT", max_size=300), max_size=5))
def test_fasta_roundtrip_property(records):
    seqs = [NucleotideSequence(k, v) for k, v in records.items()]
    back = parse_fasta(format_fasta(seqs))
    assert [(s.id, s.bases) for s in back] == [(s.id, s.bases) for s in seqs]


def test_offsets_and_fasta_dir(tmp_path):
    seqs = [NucleotideSequence("a", "ACGTACGT", [(0, 0), (4, 20)]),
            NucleotideSequence("b", "TTTT", [(0, 3)])]
    write_fasta(seqs, tmp_path / "x.fasta")
    write_offsets(seqs, tmp_path / "offsets.tsv")
    assert read_offsets(tmp_path / "offsets.tsv") == {"a": [(0, 0), (4, 20)], "b": [(0, 3)]}
    back = read_fasta_dir(tmp_path)
    assert [s.offset_map for s in back] == [[(0, 0), (4, 20)], [(0, 3)]]


def test_load_sample_formats(tmp_path):
    (tmp_path / "h.bytes").write_text("00000000 1B ?? FF\n")
    (tmp_path / "b.bin").write_bytes(b"\x1b\xff")
    raw, tokens = load_sample(tmp_path / "h.bytes")
    seq, _ = encode_sample(raw, tokens)
    assert seq.bases == "ACGTTTTT"
    assert seq.offset_map == [(0, 0), (4, 2)]
    raw, tokens = load_sample(tmp_path / "b.bin")
    assert tokens is None and encode_sample(raw)[0].bases == "ACGTTTTT"


def test_encoder_fingerprint_roundtrip():
    enc = EncoderConfig(zero_run=32)
    assert EncoderConfig.from_fingerprint(enc.fingerprint) == enc
    with pytest.raises(CodecError):
        EncoderConfig.from_fingerprint("lsb:z16")
