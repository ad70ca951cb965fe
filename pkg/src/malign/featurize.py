"""Alignment-score and alignment-count features of a sample against a signature."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .align.pairwise import ScoringParams, as_codes
from .align.seeds import DEFAULT_K, KmerIndex, seeded_local_align
from .seqcodec import ALPHABET, NucleotideSequence
from .signature import ConsensusBlock, SignatureSet

DEFAULT_MIN_SCORE = 30
_GAP = ord("-")
_LUT = np.full(256, 255, dtype=np.uint8)
for _i, _c in enumerate(ALPHABET):
    _LUT[ord(_c)] = _i


class EncoderMismatchError(ValueError):
    """Sample and signature were encoded with different settings."""


@dataclass
class FeatureVector:
    family: str
    sample_id: str
    alpha: np.ndarray
    beta: np.ndarray

    def as_row(self) -> np.ndarray:
        """Interleaved ``(alpha_1, beta_1, alpha_2, beta_2, ...)``."""
        out = np.empty(2 * len(self.alpha))
        out[0::2] = self.alpha
        out[1::2] = self.beta
        return out


def feature_names(signature: SignatureSet) -> list[str]:
    names = []
    for b in signature.blocks:
        names += [f"a{b.block_id}", f"b{b.block_id}"]
    return names


def aligned_sequence_score(gamma_sum: float, n_B: int) -> float:
    """Score of one aligned sequence: summed conservation times block support."""
    return gamma_sum * n_B


def alignment_gamma_counts(aln, block: ConsensusBlock) -> int:
    """``n_B`` times the summed conservation of one sample/consensus alignment.

    Each sample base aligned to consensus position ``j`` contributes the
    conservation of its own letter at ``j``; bases opposite a consensus gap
    contribute nothing.  Returned in units of ``1/n_B`` so it is exact.
    """
    s = np.frombuffer(aln.a_aligned.encode(), dtype=np.uint8)
    c = np.frombuffer(aln.b_aligned.encode(), dtype=np.uint8)
    in_cons = c != _GAP
    j = aln.b_interval[0] + np.cumsum(in_cons) - 1
    both = in_cons & (s != _GAP)
    return int(block.counts[j[both], _LUT[s[both]]].sum())


def score_sample(sample: NucleotideSequence, signature: SignatureSet,
                 params: ScoringParams = ScoringParams(), k: int = DEFAULT_K,
                 min_score: int = DEFAULT_MIN_SCORE) -> FeatureVector:
    """Per-block alignment score (alpha) and alignment count (beta).

    The sample is locally aligned to each consensus; alpha sums, over all
    non-overlapping alignments, the conservation of the aligned sample
    letters times ``n_B``, and beta is the number of alignments.
    """
    enc = getattr(sample, "encoder", None)
    if enc is not None and enc != signature.encoder:
        raise EncoderMismatchError(
            f"sample {sample.id} uses encoder {enc.fingerprint}, "
            f"signature {signature.family} uses {signature.encoder.fingerprint}")
    m = signature.m
    alpha = np.zeros(m)
    beta = np.zeros(m)
    if m == 0:
        return FeatureVector(signature.family, sample.id, alpha, beta)
    codes = as_codes(sample)
    index = KmerIndex(codes, k)
    for t, block in enumerate(signature.blocks):
        alns = seeded_local_align(codes, block.consensus, params, k, min_score, index=index)
        # counts are in units of 1/n_B, so n_B * sum(gamma) is their plain sum
        alpha[t] = float(sum(alignment_gamma_counts(a, block) for a in alns))
        beta[t] = len(alns)
    return FeatureVector(signature.family, sample.id, alpha, beta)


def featurize_corpus(samples, signature: SignatureSet, params: ScoringParams = ScoringParams(),
                     k: int = DEFAULT_K, min_score: int = DEFAULT_MIN_SCORE,
                     jobs: int = 1) -> np.ndarray:
    """Feature matrix with one row per sample, in input order."""
    samples = list(samples)

    def one(s):
        return score_sample(s, signature, params, k, min_score).as_row()

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            rows = list(ex.map(one, samples))
    else:
        rows = [one(s) for s in samples]
    return np.array(rows, dtype=float).reshape(len(samples), 2 * signature.m)


@dataclass
class FeatureTable:
    sample_ids: list[str]
    labels: np.ndarray
    X: np.ndarray
    names: list[str]


def write_features(path, table: FeatureTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "label"] + table.names)
        for sid, lab, row in zip(table.sample_ids, table.labels, table.X):
            w.writerow([sid, int(lab)] + [repr(float(v)) for v in row])


def read_features(path) -> FeatureTable:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or header[:2] != ["sample_id", "label"]:
            raise ValueError(f"{path}: missing 'sample_id,label' header")
        ids, labels, rows = [], [], []
        for lineno, rec in enumerate(r, start=2):
            if len(rec) != len(header):
                raise ValueError(f"{path} line {lineno}: expected {len(header)} fields")
            ids.append(rec[0])
            labels.append(int(rec[1]))
            rows.append([float(v) for v in rec[2:]])
    names = header[2:]
    X = np.array(rows, dtype=float).reshape(len(ids), len(names))
    return FeatureTable(ids, np.array(labels, dtype=np.int64), X, names)
