from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from malign.datagen import generate_family, generate_negatives
from malign.featurize import feature_names, featurize_corpus
from malign.model import (BENIGN, FamilyModel, FingerprintError, detect, fit, load_model,
                          loss_and_grad, predict)
from malign.seqcodec import NucleotideSequence, bytes_to_nucleotides, encode_sample


def _separable(n=40):
    X = np.r_[np.zeros(n // 2), np.full(n // 2, 100.0)][:, None]
    y = np.r_[np.zeros(n // 2), np.ones(n // 2)]
    return X, y


def test_separable_one_dimension():
    X, y = _separable(40)
    m = fit(X, y)
    assert ((m.predict_proba(X) >= 0.5) == y).all()


def test_symmetric_two_points():
    m = fit(np.array([[-1.0], [1.0]]), np.array([0, 1]))
    assert m.predict_proba([[0.0]])[0] == pytest.approx(0.5, abs=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(30, 5))
    y = (rng.random(30) < 0.5).astype(float)
    h = 1e-6
    for _ in range(100):
        w = rng.normal(size=5)
        b = float(rng.normal())
        _, gw, gb = loss_and_grad(w, b, Z, y)
        num = np.empty(5)
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            num[i] = (loss_and_grad(w + e, b, Z, y)[0] - loss_and_grad(w - e, b, Z, y)[0]) / (2 * h)
        numb = (loss_and_grad(w, b + h, Z, y)[0] - loss_and_grad(w, b - h, Z, y)[0]) / (2 * h)
        assert np.allclose(gw, num, rtol=1e-5, atol=1e-8)
        assert gb == pytest.approx(numb, rel=1e-5, abs=1e-8)


def _model(w, b=0.0):
    w = np.asarray(w, dtype=float)
    return FamilyModel("f", w, b, np.zeros(len(w)), np.ones(len(w)),
                       [f"x{i}" for i in range(len(w))])


def test_zero_weights_give_half():
    assert predict(_model([0.0, 0.0]), [3.0, -7.0]).probability == 0.5


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6), st.floats(-5, 5), st.data())
def test_sign_flip_complements(w, b, data):
    x = data.draw(st.lists(st.floats(-10, 10), min_size=len(w), max_size=len(w)))
    p = predict(_model(w, b), x).probability
    q = predict(_model(-np.asarray(w), -b), x).probability
    assert p + q == pytest.approx(1.0, abs=1e-12)


def test_label_follows_threshold():
    m = replace(_model([1.0]), threshold=0.7)
    assert predict(m, [0.5]).label == "negative"
    assert predict(m, [1.0]).label == "positive"


def _noisy(seed, n=60, d=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * [1, 10, 100, 0.1]
    y = (X[:, 0] + X[:, 1] / 10 + rng.normal(scale=0.5, size=n) > 0).astype(int)
    return X, y


@settings(max_examples=15)
@given(st.integers(0, 1000), st.integers(0, 3), st.floats(0.01, 100))
def test_standardization_invariance(seed, col, c):
    X, y = _noisy(seed)
    if len(set(y)) < 2:
        return
    Xs = X.copy()
    Xs[:, col] *= c
    a, b = fit(X, y), fit(Xs, y)
    assert ((a.predict_proba(X) >= 0.5) == (b.predict_proba(Xs) >= 0.5)).all()


def test_deterministic():
    X, y = _noisy(1)
    a, b = fit(X, y), fit(X, y)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


def test_constant_column_gets_zero_weight():
    X, y = _noisy(2)
    X[:, 2] = 5.0
    m = fit(X, y)
    assert m.weights[2] == 0.0 and m.feature_stds[2] == 1.0


def test_single_class_is_error():
    with pytest.raises(ValueError, match="both"):
        fit(np.ones((4, 2)), np.ones(4))


def test_non_finite_names_sample():
    X = np.ones((4, 2))
    X[2, 1] = np.nan
    with pytest.raises(ValueError, match="s2"):
        fit(X, [0, 1, 0, 1], sample_ids=["s0", "s1", "s2", "s3"])


def test_fingerprint_mismatch():
    m = _model([1.0, 2.0])
    with pytest.raises(FingerprintError):
        predict(m, [1.0, 1.0], feature_names=["x1", "x0"])
    with pytest.raises(FingerprintError):
        m.predict_proba([[1.0, 2.0, 3.0]])


def test_tampered_json_fingerprint(tmp_path):
    m = fit(*_noisy(3), feature_names=["a1", "b1", "a2", "b2"])
    text = m.to_json().replace('"a2"', '"a9"')
    with pytest.raises(FingerprintError):
        FamilyModel.from_json(text)


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_json_roundtrip(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(0, 6))
    m = FamilyModel(f"fam{seed}", rng.normal(size=d), float(rng.normal()), rng.normal(size=d),
                    rng.random(d) + 0.1, [f"a{i}" for i in range(d)], float(rng.random() + 0.01),
                    float(rng.random()), float(rng.uniform(0.01, 0.99)), "msb:z16", int(seed))
    assert FamilyModel.from_json(m.to_json()) == m


def test_save_load(tmp_path):
    m = fit(*_noisy(4))
    m.save(tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert back == m
    assert back.weights.tobytes() == m.weights.tobytes()


@pytest.fixture(scope="module")
def two_families():
    """Two trained families and the raw material they came from.

    The penalty scales as 1/(C n), so confident (p >= 0.9) positives need
    on the order of a hundred training rows at C = 0.05.
    """
    out = {}
    negs = [encode_sample(s)[0] for s in generate_negatives(31, 64, mean_len=20_000)]
    from malign.lcb import build_blocks
    from malign.signature import build_signature
    for name, seed in (("famA", 41), ("famB", 42)):
        samples, truth = generate_family(seed, n_samples=64, n_blocks=5, filler_len=20_000,
                                         family=name)
        seqs = [encode_sample(s)[0] for s in samples]
        sig = build_signature(name, build_blocks(seqs[:10]))
        X = featurize_corpus(seqs + negs, sig)
        y = np.r_[np.ones(len(seqs)), np.zeros(len(negs))]
        out[name] = (fit(X, y, feature_names(sig), family=name), sig, samples, truth)
    return out, negs


def _pairs(fams):
    return [(m, s) for m, s, _, _ in fams.values()]


def test_detect_benign(two_families):
    fams, _ = two_families
    for s in generate_negatives(77, 3, mean_len=20_000):
        assert detect(encode_sample(s)[0], _pairs(fams)).label == BENIGN


def test_detect_family(two_families):
    fams, _ = two_families
    samples, truth = generate_family(41, n_samples=67, n_blocks=5, filler_len=20_000,
                                     family="famA")
    for s in samples[64:]:
        d = detect(encode_sample(s)[0], _pairs(fams))
        assert d.label == "famA"
        assert d.predictions["famA"].probability >= 0.9


def test_detect_mixed_sample_goes_to_majority(two_families):
    fams, _ = two_families
    motifs_a = fams["famA"][3].motifs
    motifs_b = fams["famB"][3].motifs
    rng = np.random.default_rng(5)
    filler = lambda: rng.integers(0, 256, 3000, dtype=np.uint8).tobytes()
    data = b"".join(filler() + m for m in motifs_a) + filler() + motifs_b[0] + filler()
    seq = bytes_to_nucleotides(data, "mixed")
    d = detect(seq, _pairs(fams))
    assert d.predictions["famB"].probability < d.predictions["famA"].probability
    assert d.label == "famA"


def test_detect_rejects_mixed_encoders(two_families):
    fams, _ = two_families
    (ma, sa), (mb, sb) = _pairs(fams)
    with pytest.raises(FingerprintError):
        detect(NucleotideSequence("x", "ACGT"), [(ma, sa), (replace(mb, encoder="msb:z8"), sb)])


def test_monotone_in_alpha_when_weights_non_negative(two_families):
    fams, _ = two_families
    model = fams["famA"][0]
    if (model.weights < 0).any():
        pytest.skip("trained weights are not all non-negative")
    x = model.feature_means.copy()
    base = model.predict_proba(x)[0]
    for i in range(0, len(x), 2):
        if model.weights[i] > 0:
            bumped = x.copy()
            bumped[i] += model.feature_stds[i]
            assert model.predict_proba(bumped)[0] > base
