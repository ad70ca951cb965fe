"""Elastic-net logistic regression per family and the all-family detection rule."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .align.pairwise import ScoringParams
from .align.seeds import DEFAULT_K
from .featurize import DEFAULT_MIN_SCORE, feature_names, score_sample

DEFAULT_C = 0.05
DEFAULT_L1_RATIO = 0.5
DEFAULT_THRESHOLD = 0.5
MAX_EPOCHS = 10_000
TOL = 1e-7
BENIGN = "benign"


class FingerprintError(ValueError):
    """Features were produced in a different order or encoding than the model expects."""


def names_fingerprint(names) -> str:
    return hashlib.sha256(",".join(names).encode()).hexdigest()[:16]


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


@dataclass
class FamilyModel:
    family: str
    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    feature_names: list[str]
    C: float = DEFAULT_C
    l1_ratio: float = DEFAULT_L1_RATIO
    threshold: float = DEFAULT_THRESHOLD
    encoder: str = "msb:z16"
    epochs: int = 0

    @property
    def fingerprint(self) -> str:
        return names_fingerprint(self.feature_names)

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.weights):
            raise FingerprintError(f"expected {len(self.weights)} features, got {X.shape[1]}")
        Z = (X - self.feature_means) / self.feature_stds
        return Z @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision(X))

    def to_json(self) -> str:
        d = asdict(self)
        for key in ("weights", "feature_means", "feature_stds"):
            d[key] = [float(v) for v in getattr(self, key)]
        d["fingerprint"] = self.fingerprint
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FamilyModel":
        d = json.loads(text)
        fp = d.pop("fingerprint", None)
        for key in ("weights", "feature_means", "feature_stds"):
            d[key] = np.array(d[key], dtype=float)
        model = cls(**d)
        if fp is not None and fp != model.fingerprint:
            raise FingerprintError("stored fingerprint does not match the feature names")
        return model

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def __eq__(self, other) -> bool:
        if not isinstance(other, FamilyModel):
            return NotImplemented
        a, b = json.loads(self.to_json()), json.loads(other.to_json())
        return a == b


def load_model(path) -> FamilyModel:
    return FamilyModel.from_json(Path(path).read_text())


@dataclass
class Prediction:
    sample_id: str
    probability: float
    label: str

    @property
    def positive(self) -> bool:
        return self.label == "positive"


def loss_and_grad(w, b, Z, y, C=DEFAULT_C, l1_ratio=DEFAULT_L1_RATIO):
    """Penalised mean logistic loss and its (sub)gradient in ``(w, b)``.

    ``loss = mean(log(1 + e^z) - y z) + (l1_ratio |w|_1 + (1 - l1_ratio) |w|^2 / 2) / (C n)``
    with ``z = Z w + b``.  The L1 term contributes ``sign(w)``.
    """
    n = len(y)
    z = Z @ w + b
    data = float(np.mean(np.logaddexp(0.0, z) - y * z))
    pen = (l1_ratio * np.abs(w).sum() + 0.5 * (1 - l1_ratio) * (w @ w)) / (C * n)
    r = sigmoid(z) - y
    gw = Z.T @ r / n + (l1_ratio * np.sign(w) + (1 - l1_ratio) * w) / (C * n)
    gb = float(r.mean())
    return data + pen, gw, gb


def _standardize(X):
    means = X.mean(axis=0) if len(X) else np.zeros(X.shape[1])
    stds = X.std(axis=0) if len(X) else np.ones(X.shape[1])
    constant = stds == 0
    stds = np.where(constant, 1.0, stds)
    return means, stds, constant


def fit(X, y, feature_names=None, family: str = "family", C: float = DEFAULT_C,
        l1_ratio: float = DEFAULT_L1_RATIO, threshold: float = DEFAULT_THRESHOLD,
        max_epochs: int = MAX_EPOCHS, tol: float = TOL, sample_ids=None,
        encoder: str = "msb:z16") -> FamilyModel:
    """Fit by accelerated proximal gradient (FISTA with adaptive restart).

    Full-batch and deterministic: the same data always gives the same
    weights.  Columns are standardised on the training data; constant
    columns get unit scale and a zero weight.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if feature_names is None:
        feature_names = [f"x{i}" for i in range(d)]
    if len(feature_names) != d:
        raise ValueError("feature_names length does not match the feature matrix")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if len(np.unique(y)) < 2:
        raise ValueError("training data needs both positive and negative samples")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        name = sample_ids[i] if sample_ids is not None else f"row {i}"
        raise ValueError(f"non-finite feature in sample {name}")
    if C <= 0 or not 0 <= l1_ratio <= 1:
        raise ValueError("C must be positive and l1_ratio in [0, 1]")

    means, stds, constant = _standardize(X)
    Z = (X - means) / stds
    Z[:, constant] = 0.0
    l1 = l1_ratio / (C * n)
    l2 = (1 - l1_ratio) / (C * n)
    Zb = np.hstack([Z, np.ones((n, 1))])
    lip = 0.25 * np.linalg.norm(Zb, 2) ** 2 / n + l2
    step = 1.0 / lip

    def smooth(v):
        z = Zb @ v
        r = sigmoid(z) - y
        g = Zb.T @ r / n
        g[:d] += l2 * v[:d]
        return g

    def objective(v):
        z = Zb @ v
        return float(np.mean(np.logaddexp(0.0, z) - y * z)
                     + l1 * np.abs(v[:d]).sum() + 0.5 * l2 * (v[:d] @ v[:d]))

    v = np.zeros(d + 1)
    mom = v.copy()
    t = 1.0
    prev = objective(v)
    epochs = 0
    for epochs in range(1, max_epochs + 1):
        nxt = mom - step * smooth(mom)
        nxt[:d] = np.sign(nxt[:d]) * np.maximum(np.abs(nxt[:d]) - step * l1, 0.0)
        cur = objective(nxt)
        if cur > prev:
            # restart momentum and take a plain proximal step instead
            mom, t = v.copy(), 1.0
            nxt = v - step * smooth(v)
            nxt[:d] = np.sign(nxt[:d]) * np.maximum(np.abs(nxt[:d]) - step * l1, 0.0)
            cur = objective(nxt)
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        mom = nxt + ((t - 1) / t_next) * (nxt - v)
        v, t = nxt, t_next
        done = abs(prev - cur) < tol
        prev = cur
        if done:
            break
    w = v[:d].copy()
    w[constant] = 0.0
    return FamilyModel(family, w, float(v[d]), means, stds, list(feature_names), C, l1_ratio,
                       threshold, encoder, epochs)


def predict(model: FamilyModel, features, feature_names=None, sample_id: str = "") -> Prediction:
    """Probability and label for one feature vector.

    ``features`` may be a :class:`~malign.featurize.FeatureVector` or a raw
    row; if ``feature_names`` are given they must match the model's.
    """
    if hasattr(features, "as_row"):
        sample_id = sample_id or features.sample_id
        features = features.as_row()
    if feature_names is not None and names_fingerprint(feature_names) != model.fingerprint:
        raise FingerprintError("feature order does not match the model")
    p = float(model.predict_proba(features)[0])
    return Prediction(sample_id, p, "positive" if p >= model.threshold else "negative")


@dataclass
class Detection:
    sample_id: str
    label: str
    predictions: dict[str, Prediction] = field(default_factory=dict)


def detect(sample, families, params: ScoringParams = ScoringParams(), k: int = DEFAULT_K,
           min_score: int = DEFAULT_MIN_SCORE) -> Detection:
    """Run every family classifier; benign if all say negative, otherwise the
    positive family with the highest probability.

    ``families`` is a sequence of ``(FamilyModel, SignatureSet)`` pairs.
    """
    families = list(families)
    encoders = {m.encoder for m, _ in families}
    if len(encoders) > 1:
        raise FingerprintError(f"models use different encoders: {sorted(encoders)}")
    preds = {}
    for model, sig in families:
        if sig.encoder.fingerprint != model.encoder:
            raise FingerprintError(f"{model.family}: signature and model encoders differ")
        fv = score_sample(sample, sig, params, k, min_score)
        preds[model.family] = predict(model, fv, feature_names(sig))
    positive = [(p.probability, fam) for fam, p in preds.items() if p.positive]
    if not positive:
        return Detection(sample.id, BENIGN, preds)
    best = max(positive, key=lambda x: x[0])
    return Detection(sample.id, best[1], preds)
