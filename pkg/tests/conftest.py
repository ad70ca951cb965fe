import os
import time
from types import SimpleNamespace

import pytest
from hypothesis import HealthCheck, settings

from malign.datagen import generate_corpus, generate_family
from malign.lcb import build_blocks
from malign.seqcodec import encode_sample

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=1000,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FAMILY_SEED = 2024
CORPUS_SEED = 77


@pytest.fixture(scope="session")
def default_family():
    """Default generator family, its encoding and aligned blocks."""
    samples, truth = generate_family(FAMILY_SEED, family="fam")
    seqs = [encode_sample(s)[0] for s in samples]
    return samples, truth, seqs, build_blocks(seqs)


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    """Three synthetic families plus a benign pool, trained end to end."""
    from malign.pipeline import PipelineConfig, run_pipeline

    t0 = time.perf_counter()
    root = tmp_path_factory.mktemp("corpus")
    corpus = generate_corpus(CORPUS_SEED, n_families=3, n_samples=20, n_negatives=60)
    dirs = {}
    for name, (samples, _) in corpus.families.items():
        d = root / name
        d.mkdir()
        for s in samples:
            (d / f"{s.id}.bin").write_bytes(s.bytes)
        dirs[name] = d
    neg = root / "benign"
    neg.mkdir()
    for s in corpus.negatives:
        (neg / f"{s.id}.bin").write_bytes(s.bytes)
    cfg = PipelineConfig(seed=5, families=dirs, negatives=neg, out=root / "run", jobs=3)
    report = run_pipeline(cfg)
    return SimpleNamespace(corpus=corpus, cfg=cfg, report=report,
                           elapsed=time.perf_counter() - t0)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
