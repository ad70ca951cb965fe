"""End-to-end training and evaluation across families."""
from __future__ import annotations

import csv
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import signature as sigmod
from .align.pairwise import ScoringParams
from .featurize import FeatureTable, feature_names, featurize_corpus, write_features
from .lcb import build_blocks, write_gff, write_maf
from .model import BENIGN, FamilyModel, detect, fit
from .seqcodec import EncoderConfig, encode_sample, load_sample, write_fasta, write_offsets

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class InputMissingError(FileNotFoundError):
    pass


@dataclass
class PipelineConfig:
    seed: int
    families: dict[str, Path]
    negatives: Path
    out: Path
    split: float = 0.8
    k: int = 15
    min_block_len: int = 200
    min_support: int = 2
    max_block_samples: int | None = None
    min_score: int = 30
    C: float = 0.05
    l1_ratio: float = 0.5
    threshold: float = 0.5
    zero_run: int = 16
    jobs: int = 1

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> "PipelineConfig":
        if "seed" not in d:
            raise ValueError("config must set 'seed'")
        if not d.get("families"):
            raise ValueError("config must list at least one family under [families]")
        if "negatives" not in d:
            raise ValueError("config must set 'negatives'")
        blocks = d.get("blocks", {})
        feats = d.get("features", {})
        model = d.get("model", {})
        cfg = cls(
            seed=int(d["seed"]),
            families={name: base / p for name, p in d["families"].items()},
            negatives=base / d["negatives"],
            out=base / d.get("out", "malign_run"),
            split=float(d.get("split", 0.8)),
            k=int(blocks.get("k", 15)),
            min_block_len=int(blocks.get("min_len", 200)),
            min_support=int(blocks.get("min_support", 2)),
            max_block_samples=blocks.get("max_samples"),
            min_score=int(feats.get("min_score", 30)),
            C=float(model.get("c", 0.05)),
            l1_ratio=float(model.get("l1_ratio", 0.5)),
            threshold=float(model.get("threshold", 0.5)),
            zero_run=int(d.get("encoder", {}).get("zero_run", 16)),
            jobs=int(d.get("jobs", 1)),
        )
        if not 0 < cfg.split <= 1:
            raise ValueError("split must be in (0, 1]")
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh), path.parent)

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(zero_run=self.zero_run)


def list_samples(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise InputMissingError(f"input directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.is_file() and not p.name.startswith("."))


def encode_files(paths, encoder: EncoderConfig):
    seqs, raws = [], []
    for p in paths:
        raw, tokens = load_sample(p)
        seq, _ = encode_sample(raw, tokens, encoder)
        seqs.append(seq)
        raws.append((raw, tokens))
    return seqs, raws


def split_indices(n: int, fraction: float, rng: np.random.Generator):
    order = rng.permutation(n)
    n_train = n if fraction >= 1 else int(round(fraction * n))
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def _family_seed(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


@dataclass
class FamilyResult:
    family: str
    n_blocks: int
    n_train: int
    n_test: int
    train_accuracy: float
    test_accuracy: float | None
    model: FamilyModel
    signature: sigmod.SignatureSet
    test_samples: list = field(default_factory=list)


@dataclass
class PipelineReport:
    families: dict[str, FamilyResult]
    detect_accuracy: dict[str, float | None]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["family", "blocks", "train_samples", "test_samples", "train_accuracy",
                        "test_accuracy", "detect_accuracy"])
            for name, r in sorted(self.families.items()):
                det = self.detect_accuracy.get(name)
                w.writerow([name, r.n_blocks, r.n_train, r.n_test, f"{r.train_accuracy:.4f}",
                            "NA" if r.test_accuracy is None else f"{r.test_accuracy:.4f}",
                            "NA" if det is None else f"{det:.4f}"])
            det = self.detect_accuracy.get(BENIGN)
            w.writerow([BENIGN, "", "", "", "", "", "NA" if det is None else f"{det:.4f}"])


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (InputMissingError, PipelineError):
        raise
    except Exception as exc:
        raise PipelineError(name, f"{type(exc).__name__}: {exc}") from exc


def train_family(name: str, pos_seqs, neg_train, neg_test, cfg: PipelineConfig,
                 params: ScoringParams = ScoringParams()) -> FamilyResult:
    """Blocks, signature, features and model for one family.

    ``pos_seqs`` are all encoded positives; the train/test split is drawn
    here from the family's own seed stream.
    """
    rng = _family_seed(cfg.seed, name)
    tr, te = split_indices(len(pos_seqs), cfg.split, rng)
    train_pos = [pos_seqs[i] for i in tr]
    test_pos = [pos_seqs[i] for i in te]
    if len(train_pos) < cfg.min_support:
        raise PipelineError("split", f"{name}: only {len(train_pos)} training samples")
    fam_dir = cfg.out / name
    fam_dir.mkdir(parents=True, exist_ok=True)

    block_seqs = train_pos[:cfg.max_block_samples] if cfg.max_block_samples else train_pos
    write_fasta(block_seqs, fam_dir / "train.fasta")
    write_offsets(block_seqs, fam_dir / "offsets.tsv")
    blocks = _stage("blocks", build_blocks, block_seqs, k=cfg.k, min_block_len=cfg.min_block_len,
                    min_support=cfg.min_support, params=params)
    write_maf(blocks, fam_dir / "blocks.maf")
    write_gff(blocks, fam_dir / "blocks.gff")
    log.info("%s: %d blocks from %d sequences", name, len(blocks), len(block_seqs))

    sig = _stage("signature", sigmod.build_signature, name, blocks, cfg.encoder)
    sigmod.save(sig, fam_dir / "signature")

    n_neg = min(len(train_pos), len(neg_train))
    if n_neg < len(train_pos):
        log.warning("%s: only %d negatives for %d positives", name, n_neg, len(train_pos))
    neg_idx = np.sort(rng.choice(len(neg_train), n_neg, replace=False))
    train_set = train_pos + [neg_train[i] for i in neg_idx]
    y = np.r_[np.ones(len(train_pos)), np.zeros(n_neg)].astype(np.int64)
    X = _stage("featurize", featurize_corpus, train_set, sig, params, cfg.k, cfg.min_score)
    names = feature_names(sig)
    write_features(fam_dir / "features.csv", FeatureTable([s.id for s in train_set], y, X, names))

    model = _stage("train", fit, X, y, names, family=name, C=cfg.C, l1_ratio=cfg.l1_ratio,
                   threshold=cfg.threshold, sample_ids=[s.id for s in train_set],
                   encoder=cfg.encoder.fingerprint)
    model.save(fam_dir / "model.json")
    train_acc = float(((model.predict_proba(X) >= model.threshold) == y).mean())

    test_acc = None
    if test_pos:
        n_neg = min(len(test_pos), len(neg_test))
        neg_idx = np.sort(rng.choice(len(neg_test), n_neg, replace=False))
        test_set = test_pos + [neg_test[i] for i in neg_idx]
        yt = np.r_[np.ones(len(test_pos)), np.zeros(n_neg)]
        Xt = _stage("featurize", featurize_corpus, test_set, sig, params, cfg.k, cfg.min_score)
        test_acc = float(((model.predict_proba(Xt) >= model.threshold) == yt).mean())
    log.info("%s: train accuracy %.4f, test accuracy %s", name, train_acc,
             "NA" if test_acc is None else f"{test_acc:.4f}")
    return FamilyResult(name, len(blocks), len(train_set), len(te), train_acc, test_acc,
                        model, sig, test_pos)


def run_pipeline(cfg: PipelineConfig) -> PipelineReport:
    params = ScoringParams()
    for path in [cfg.negatives, *cfg.families.values()]:
        list_samples(path)
    cfg.out.mkdir(parents=True, exist_ok=True)

    neg_seqs, _ = _stage("encode", encode_files, list_samples(cfg.negatives), cfg.encoder)
    tr, te = split_indices(len(neg_seqs), cfg.split, _family_seed(cfg.seed, BENIGN))
    neg_train = [neg_seqs[i] for i in tr]
    neg_test = [neg_seqs[i] for i in te]

    def one(name):
        seqs, _ = _stage("encode", encode_files, list_samples(cfg.families[name]), cfg.encoder)
        return train_family(name, seqs, neg_train, neg_test, cfg, params)

    names = sorted(cfg.families)
    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as ex:
            results = dict(zip(names, ex.map(one, names)))
    else:
        results = {n: one(n) for n in names}

    # route every held-out sample through all family classifiers
    pairs = [(results[n].model, results[n].signature) for n in names]
    detect_acc: dict[str, float | None] = {}
    rows = []
    for name in names + [BENIGN]:
        samples = neg_test if name == BENIGN else results[name].test_samples
        if not samples:
            detect_acc[name] = None
            continue
        hits = 0
        for s in samples:
            d = _stage("detect", detect, s, pairs, params, cfg.k, cfg.min_score)
            rows.append((s.id, name, d.label))
            hits += d.label == name
        detect_acc[name] = hits / len(samples)
    with open(cfg.out / "detect.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "true_label", "predicted"])
        w.writerows(rows)

    report = PipelineReport(results, detect_acc)
    report.write_csv(cfg.out / "report.csv")
    return report
