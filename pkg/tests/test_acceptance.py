"""The nine acceptance criteria, each at its stated tolerance and time limit.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, FAMILY_SEED
from oracles import exhaustive_score

from malign import signature as sigmod
from malign.adversary import MutationSpec, evaluate_robustness
from malign.align import global_align, local_align
from malign.datagen import GroundTruth, generate_family, motif_recovery, reorder_motifs
from malign.explain import locate, reencode
from malign.featurize import aligned_sequence_score
from malign.lcb import AlignmentBlock, BlockRow, build_blocks, format_maf, parse_maf
from malign.model import FamilyModel, loss_and_grad
from malign.seqcodec import (NucleotideSequence, bytes_to_nucleotides, clean, encode_sample,
                             format_fasta, nucleotides_to_bytes, parse_fasta)


def _record(n, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    ACCEPTANCE_LINES[n] = (f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  "
                           f"[{elapsed:.1f}s, limit {limit:g}s]")
    print(ACCEPTANCE_LINES[n])
    assert ok, ACCEPTANCE_LINES[n]


def test_c1_worked_conservation_example():
    t0 = time.perf_counter()
    rows = ["GACTGTCA", "GACTGTCA", "GACTGACA"]
    block = AlignmentBlock(1, [BlockRow(f"s{i}", 0, 8, r) for i, r in enumerate(rows)])
    c = sigmod.build_consensus(block)
    checks = [c.gamma_fraction(0, "G") == 1,
              c.gamma_fraction(5, "T") == Fraction(2, 3),
              c.gamma_fraction(5, "A") == Fraction(1, 3),
              abs(aligned_sequence_score(7.32, 3) - 21.96) <= 1e-9]
    _record(1, all(checks), f"gamma G=1, T=2/3, A=1/3, 7.32*3=21.96 -> {checks}",
            time.perf_counter() - t0, 1)


def test_c2_dp_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(1000):
        a = "".join(rng.choice(list("ACGT"), int(rng.integers(1, 11))))
        b = "".join(rng.choice(list("ACGT"), int(rng.integers(1, 11))))
        if global_align(a, b).score != exhaustive_score(a, b):
            bad += 1
        hits = local_align(a, b)
        top = hits[0].score if hits else 0
        if top != exhaustive_score(a, b, local=True):
            bad += 1
    _record(2, bad == 0, f"{bad} mismatches over 1000 pairs x (global, local)",
            time.perf_counter() - t0, 60)


def test_c3_encoder_bijection_and_cleaning():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(10_000):
        n = int(rng.integers(0, 200))
        arr = rng.integers(0, 256, n, dtype=np.uint8)
        # sprinkle zero runs of varied lengths so the cleaner has work to do
        for _ in range(int(rng.integers(0, 4))):
            if n:
                p = int(rng.integers(0, n))
                arr[p:p + int(rng.integers(1, 40))] = 0
        data = arr.tobytes()
        seq = bytes_to_nucleotides(data)
        once, _ = clean(data)
        twice, _ = clean(once)
        if nucleotides_to_bytes(seq) != data or len(seq) != 4 * n or once != twice:
            bad += 1
    _record(3, bad == 0, f"{bad} violations over 10000 arrays", time.perf_counter() - t0, 10)


@pytest.fixture(scope="module")
def recovery_runs():
    t0 = time.perf_counter()
    samples, truth = generate_family(FAMILY_SEED, family="fam")
    runs = []
    for variant in ("original", "reshuffled"):
        if variant == "reshuffled":
            placements = []
            moved = []
            for i, s in enumerate(samples):
                new, ps = reorder_motifs(s, truth.for_sample(s.id), seed=100 + i)
                moved.append(new)
                placements += ps
            samples, truth = moved, GroundTruth(truth.family, truth.motifs, placements)
        seqs = [encode_sample(s)[0] for s in samples]
        blocks = build_blocks(seqs)
        runs.append((samples, truth, seqs, blocks, motif_recovery(blocks, truth, seqs)))
    return runs, time.perf_counter() - t0


def _supports(blocks):
    return sorted(tuple(sorted(r.seq_id for r in b.rows)) for b in blocks)


def test_c4_block_recovery(recovery_runs):
    runs, elapsed = recovery_runs
    recovered = [{m for m, cov in r[4].items() if cov >= 0.9} for r in runs]
    same = recovered[0] == recovered[1] and _supports(runs[0][3]) == _supports(runs[1][3])
    covs = ", ".join(f"{cov:.3f}" for cov in runs[0][4].values())
    _record(4, len(recovered[0]) >= 4 and same,
            f"{len(recovered[0])}/5 motifs >= 90% (coverage {covs}); "
            f"reshuffled identical: {same}", elapsed, 300)


def test_c5_end_to_end_classification(pipeline_run):
    rep = pipeline_run.report
    test_acc = {f: r.test_accuracy for f, r in rep.families.items()}
    det = rep.detect_accuracy
    ok = (all(a is not None and a >= 0.95 for a in test_acc.values())
          and all(a is not None and a >= 0.95 for a in det.values()))
    detail = ("held-out " + ", ".join(f"{f}={a:.3f}" for f, a in sorted(test_acc.items()))
              + "; detect " + ", ".join(f"{f}={a:.3f}" for f, a in sorted(det.items())))
    _record(5, ok, detail, pipeline_run.elapsed, 600)


def test_c6_robustness(pipeline_run):
    t0 = time.perf_counter()
    corpus, rep = pipeline_run.corpus, pipeline_run.report
    families = [(rep.families[f].model, rep.families[f].signature) for f in sorted(rep.families)]
    samples = []
    for i, (name, (_, truth)) in enumerate(sorted(corpus.families.items())):
        fresh, _ = generate_family(9000 + i, n_samples=10, motifs=truth.motifs, family=name)
        samples += [(replace(s, id=f"{s.id}_heldout"), name) for s in fresh]
    specs = [MutationSpec("pad_append", 0.0125, seed=1), MutationSpec("pad_append", 0.25, seed=2),
             MutationSpec("intersperse", 0.10, seed=3), MutationSpec("shuffle_blocks", 1.0, seed=4),
             MutationSpec("substitute", 0.5, seed=5)]
    report = evaluate_robustness(families, samples, specs, benign_pool=corpus.negatives)
    rates = {(r.spec.kind, r.spec.magnitude): r.rate for r in report.results}
    sanity = rates.pop(("substitute", 0.5))
    ok = all(v <= 0.05 for v in rates.values()) and sanity >= 0.9 and report.results[0].total
    detail = (", ".join(f"{k}@{m:g}={v:.2%}" for (k, m), v in rates.items())
              + f"; substitute@0.5={sanity:.2%} (want >= 90%); "
              f"{report.results[0].total} samples, {report.skipped} skipped")
    _record(6, ok, detail, time.perf_counter() - t0, 600)


def test_c7_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    Z = rng.normal(size=(50, 6))
    y = (rng.random(50) < 0.5).astype(float)
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        w, b = rng.normal(size=6), float(rng.normal())
        _, gw, gb = loss_and_grad(w, b, Z, y)
        g = np.r_[gw, gb]
        num = np.empty(7)
        for i in range(7):
            e = np.zeros(7)
            e[i] = h
            up = loss_and_grad(w + e[:6], b + e[6], Z, y)[0]
            dn = loss_and_grad(w - e[:6], b - e[6], Z, y)[0]
            num[i] = (up - dn) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - num) / np.linalg.norm(num)))
    _record(7, worst <= 1e-5, f"max relative error {worst:.2e}", time.perf_counter() - t0, 10)


def _rand_bases(rng, n):
    return "".join(rng.choice(list("ACGT"), n))


def test_c8_format_round_trips(tmp_path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    failures = {"fasta": 0, "maf": 0, "signature": 0, "model": 0}
    for i in range(100):
        seqs = [NucleotideSequence(f"s{i}_{j}", _rand_bases(rng, int(rng.integers(0, 300))))
                for j in range(int(rng.integers(1, 5)))]
        back = parse_fasta(format_fasta(seqs))
        failures["fasta"] += [(s.id, s.bases) for s in back] != [(s.id, s.bases) for s in seqs]

        blocks = []
        for bid in range(1, int(rng.integers(1, 5)) + 1):
            width = int(rng.integers(1, 60))
            rows = []
            for r in range(int(rng.integers(1, 5))):
                text = "".join(rng.choice(list("ACGT-"), width))
                size = width - text.count("-")
                start = int(rng.integers(0, 10_000))
                rows.append(BlockRow(f"r{r}", start, start + size, text, start + size + 7))
            blocks.append(AlignmentBlock(bid, rows))
        failures["maf"] += parse_maf(format_maf(blocks)) != blocks

        sig = sigmod.build_signature(f"fam{i}", [b for b in blocks if b.n_B > 0])
        d = tmp_path / f"sig{i}"
        sigmod.save(sig, d)
        failures["signature"] += sigmod.load(d) != sig

        k = int(rng.integers(0, 8))
        model = FamilyModel(f"fam{i}", rng.normal(size=k), float(rng.normal()),
                            rng.normal(size=k), rng.random(k) + 0.5, [f"a{j}" for j in range(k)],
                            float(rng.random()) + 0.01, float(rng.random()),
                            float(rng.uniform(0.05, 0.95)), "msb:z16", i)
        model.save(tmp_path / f"m{i}.json")
        failures["model"] += FamilyModel.from_json((tmp_path / f"m{i}.json").read_text()) != model
    _record(8, not any(failures.values()), f"failures per format over 100 instances: {failures}",
            time.perf_counter() - t0, 30)


def test_c9_backtracking_round_trip(recovery_runs):
    t0 = time.perf_counter()
    runs, _ = recovery_runs
    rows = bad = 0
    for samples, _, seqs, blocks, _ in runs:
        raw = {s.id: s.bytes for s in samples}
        by_id = {s.id: s for s in seqs}
        for b in blocks:
            for loc, row in zip(locate(b.block_id, blocks, by_id), b.rows):
                rows += 1
                bad += reencode(loc, raw[row.seq_id]) != row.ungapped
    _record(9, rows > 0 and bad == 0, f"{bad} mismatching rows of {rows}",
            time.perf_counter() - t0, 60)
