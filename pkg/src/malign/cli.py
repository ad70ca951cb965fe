"""Command line interface: ``malign <command> ...``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import signature as sigmod
from .adversary import KINDS, MutationSpec, evaluate_robustness, mutate
from .datagen import generate_corpus, write_ground_truth
from .explain import locate, top_blocks, write_trace
from .featurize import FeatureTable, feature_names, featurize_corpus, read_features, write_features
from .lcb import build_blocks, read_maf, write_gff, write_maf
from .model import BENIGN, detect, fit, load_model, predict
from .pipeline import (InputMissingError, PipelineConfig, PipelineError, list_samples,
                       run_pipeline, tomllib)
from .seqcodec import (EncoderConfig, NucleotideSequence, encode_sample, load_sample, read_fasta,
                       read_fasta_dir, read_offsets, write_fasta, write_offsets)

log = logging.getLogger("malign")


def _need_dir(path) -> Path:
    path = Path(path)
    if not path.is_dir():
        raise InputMissingError(f"input directory not found: {path}")
    return path


def _need_file(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise InputMissingError(f"input file not found: {path}")
    return path


def _read_sequences(path):
    path = Path(path)
    if path.is_dir():
        return read_fasta_dir(path)
    return read_fasta(_need_file(path))


def _load_family_dir(d: Path):
    return load_model(d / "model.json"), sigmod.load(d / "signature")


def _family_dirs(models: Path):
    dirs = sorted(p for p in _need_dir(models).iterdir() if (p / "model.json").is_file())
    if not dirs:
        raise InputMissingError(f"no <family>/model.json entries under {models}")
    return dirs


# -- subcommands --------------------------------------------------------------

def cmd_encode(args):
    src = Path(args.input)
    if src.is_dir():
        files = list_samples(src)
    else:
        files = [_need_file(src)]
    encoder = EncoderConfig(zero_run=args.zero_run)
    seqs = []
    for f in files:
        raw, tokens = load_sample(f, args.format)
        seq, report = encode_sample(raw, tokens, encoder)
        log.info("%s: kept %d of %d bytes", raw.id, report.retained, report.total)
        seqs.append(seq)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_fasta(seqs, out / "sequences.fasta")
    write_offsets(seqs, out / "offsets.tsv")


def cmd_blocks(args):
    seqs = read_fasta_dir(_need_dir(args.fasta))
    blocks = build_blocks(seqs, k=args.k, min_block_len=args.min_len, min_support=args.min_support)
    write_maf(blocks, args.out)
    if args.gff:
        write_gff(blocks, args.gff)
    log.info("%d blocks", len(blocks))


def cmd_signature(args):
    blocks = read_maf(_need_file(args.maf))
    sig = sigmod.build_signature(args.family, blocks, EncoderConfig(zero_run=args.zero_run))
    sigmod.save(sig, args.out)
    log.info("%s: %d consensus blocks", args.family, sig.m)


def cmd_featurize(args):
    sig = sigmod.load(_need_dir(args.signature))
    pos = read_fasta_dir(_need_dir(args.pos))
    neg = read_fasta_dir(_need_dir(args.neg)) if args.neg else []
    samples = pos + neg
    X = featurize_corpus(samples, sig, min_score=args.min_score, jobs=args.jobs)
    y = np.r_[np.ones(len(pos)), np.zeros(len(neg))].astype(np.int64)
    write_features(args.out, FeatureTable([s.id for s in samples], y, X, feature_names(sig)))


def cmd_train(args):
    table = read_features(_need_file(args.features))
    model = fit(table.X, table.labels, table.names, family=args.family, C=args.c,
                l1_ratio=args.l1_ratio, threshold=args.threshold, sample_ids=table.sample_ids,
                encoder=args.encoder)
    model.save(args.out)


def _write_rows(path, header, rows):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if path:
            fh.close()


def cmd_predict(args):
    model = load_model(_need_file(args.model))
    sig = sigmod.load(_need_dir(args.signature))
    names = feature_names(sig)
    rows = []
    for s in _read_sequences(args.input):
        p = predict(model, featurize_corpus([s], sig, min_score=args.min_score)[0], names, s.id)
        rows.append([p.sample_id, f"{p.probability:.6f}", p.label])
    _write_rows(args.out, ["sample_id", "probability", "label"], rows)


def cmd_detect(args):
    families = [_load_family_dir(d) for d in _family_dirs(Path(args.models))]
    fams = [m.family for m, _ in families]
    rows = []
    for s in _read_sequences(args.input):
        d = detect(s, families, min_score=args.min_score)
        rows.append([s.id, d.label] + [f"{d.predictions[f].probability:.6f}" for f in fams])
    _write_rows(args.out, ["sample_id", "label"] + [f"p_{f}" for f in fams], rows)


def cmd_gen(args):
    corpus = generate_corpus(args.seed, n_families=args.families, n_samples=args.samples,
                             n_negatives=args.negatives, n_blocks=args.blocks,
                             block_len=args.block_len, mutation_rate=args.mutation,
                             filler_len=args.filler, shuffle=not args.no_shuffle)
    out = Path(args.out)
    for name, (samples, _) in corpus.families.items():
        (out / name).mkdir(parents=True, exist_ok=True)
        for s in samples:
            (out / name / f"{s.id}.bin").write_bytes(s.bytes)
    (out / BENIGN).mkdir(parents=True, exist_ok=True)
    for s in corpus.negatives:
        (out / BENIGN / f"{s.id}.bin").write_bytes(s.bytes)
    write_ground_truth([t for _, t in corpus.families.values()], out / "ground_truth.csv")


def _pool(path):
    return [load_sample(p)[0] for p in list_samples(path)] if path else None


def cmd_mutate(args):
    raw, _ = load_sample(_need_file(args.input))
    spec = MutationSpec(args.kind, args.magnitude, args.seed, args.chunk_size)
    out = mutate(raw, spec, _pool(args.pool), _pool(args.pool))
    Path(args.out).write_bytes(out.bytes)


def load_specs(path) -> list[MutationSpec]:
    with open(_need_file(path), "rb") as fh:
        data = tomllib.load(fh)
    specs = []
    for d in data.get("spec", []):
        specs.append(MutationSpec(d["kind"], float(d["magnitude"]), int(d.get("seed", 0)),
                                  int(d.get("chunk_size", 4096))))
    if not specs:
        raise ValueError(f"{path}: no [[spec]] entries")
    return specs


def cmd_eval_robustness(args):
    family_dirs = _family_dirs(Path(args.models))
    families = [_load_family_dir(d) for d in family_dirs]
    corpus = _need_dir(args.corpus)
    samples = {}
    for m, _ in families:
        samples[m.family] = [load_sample(p)[0] for p in list_samples(corpus / m.family)]
    benign_dir = Path(args.benign) if args.benign else corpus / BENIGN
    benign = _pool(benign_dir) if benign_dir.is_dir() else None
    donors = {f: [s for g, ss in samples.items() if g != f for s in ss] for f in samples}
    pairs = [(s, f) for f, ss in samples.items() for s in ss]
    encoder = EncoderConfig.from_fingerprint(families[0][0].encoder)
    report = evaluate_robustness(families, pairs, load_specs(args.specs), benign, donors, encoder)
    report.write_csv(args.report)
    for r in report.results:
        log.info("%s %.4g: %d/%d evaded", r.spec.kind, r.spec.magnitude, r.evaded, r.total)


def cmd_backtrack(args):
    model = load_model(_need_file(args.model))
    sig = sigmod.load(_need_dir(args.signature))
    maf = _need_file(args.maf)
    blocks = read_maf(maf)
    offsets_path = Path(args.offsets) if args.offsets else maf.parent / "offsets.tsv"
    maps = read_offsets(offsets_path) if offsets_path.is_file() else {}
    seqs = {sid: NucleotideSequence(sid, "", omap) for sid, omap in maps.items()}
    ranked = top_blocks(model, sig, args.top)
    write_trace(args.out, ranked, {r.block_id: locate(r.block_id, blocks, seqs) for r in ranked})


def cmd_run(args):
    cfg = PipelineConfig.load(_need_file(args.config))
    if args.jobs:
        cfg.jobs = args.jobs
    report = run_pipeline(cfg)
    for name, r in sorted(report.families.items()):
        test = "NA" if r.test_accuracy is None else f"{r.test_accuracy:.4f}"
        print(f"{name}\tblocks={r.n_blocks}\ttrain_acc={r.train_accuracy:.4f}\ttest_acc={test}")
    for name, acc in report.detect_accuracy.items():
        print(f"detect[{name}]\t{'NA' if acc is None else f'{acc:.4f}'}")


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="malign", description="Alignment-based malware family detection")
    p.add_argument("--version", action="version", version=f"malign {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("encode", help="clean and encode binaries / hexdumps into FASTA")
    s.add_argument("--input", required=True, help="file or directory of samples")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--format", choices=["auto", "bytes", "bin"], default="auto")
    s.add_argument("--zero-run", type=int, default=16)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("blocks", help="find and align locally collinear blocks")
    s.add_argument("--fasta", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--gff")
    s.add_argument("--k", type=int, default=15)
    s.add_argument("--min-len", type=int, default=200)
    s.add_argument("--min-support", type=int, default=2)
    s.set_defaults(func=cmd_blocks)

    s = sub.add_parser("signature", help="consensus signature from a MAF")
    s.add_argument("--maf", required=True)
    s.add_argument("--family", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--zero-run", type=int, default=16)
    s.set_defaults(func=cmd_signature)

    s = sub.add_parser("featurize", help="alignment features of samples against a signature")
    s.add_argument("--signature", required=True)
    s.add_argument("--pos", required=True)
    s.add_argument("--neg")
    s.add_argument("--out", required=True)
    s.add_argument("--min-score", type=int, default=30)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("train", help="fit an elastic-net logistic model")
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--family", default="family")
    s.add_argument("--c", type=float, default=0.05)
    s.add_argument("--l1-ratio", type=float, default=0.5)
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--encoder", default=EncoderConfig().fingerprint)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="score samples with one family model")
    s.add_argument("--model", required=True)
    s.add_argument("--signature", required=True)
    s.add_argument("--input", required=True, help="FASTA file or directory")
    s.add_argument("--out")
    s.add_argument("--min-score", type=int, default=30)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("detect", help="route samples to a family or benign")
    s.add_argument("--models", required=True, help="directory of <family>/{model.json,signature/}")
    s.add_argument("--input", required=True)
    s.add_argument("--out")
    s.add_argument("--min-score", type=int, default=30)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("gen", help="generate a synthetic corpus")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--families", type=int, default=3)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--negatives", type=int, default=60)
    s.add_argument("--blocks", type=int, default=5)
    s.add_argument("--block-len", type=int, default=500)
    s.add_argument("--mutation", type=float, default=0.02)
    s.add_argument("--filler", type=int, default=50_000)
    s.add_argument("--no-shuffle", action="store_true")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("mutate", help="apply one evasion mutation to a sample")
    s.add_argument("--input", required=True)
    s.add_argument("--kind", required=True, choices=KINDS)
    s.add_argument("--magnitude", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--chunk-size", type=int, default=4096)
    s.add_argument("--pool", help="directory of samples to splice from")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mutate)

    s = sub.add_parser("eval-robustness", help="evasion rates of mutation specs")
    s.add_argument("--models", required=True)
    s.add_argument("--corpus", required=True, help="directory of <family>/ sample folders")
    s.add_argument("--specs", required=True, help="TOML file with [[spec]] tables")
    s.add_argument("--benign", help="benign pool (default <corpus>/benign)")
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_eval_robustness)

    s = sub.add_parser("backtrack", help="byte offsets of the most influential blocks")
    s.add_argument("--model", required=True)
    s.add_argument("--signature", required=True)
    s.add_argument("--maf", required=True)
    s.add_argument("--offsets", help="offsets.tsv (default: next to the MAF)")
    s.add_argument("--top", type=int, default=10)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_backtrack)

    s = sub.add_parser("run", help="full pipeline from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--jobs", type=int)
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except InputMissingError as exc:
        print(f"malign: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"malign: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"malign {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
