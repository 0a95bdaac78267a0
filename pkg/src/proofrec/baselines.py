"""Classical comparison systems over featurized token streams.

Features are contiguous token n-grams (n = 1..max_n) weighted by smoothed
TF-IDF and L2-normalized, so Euclidean and cosine orderings agree. On top of
them: a distance-weighted k-nearest-neighbor classifier, a multinomial
logistic-regression classifier trained by mini-batch gradient descent, and
the raw-count / cosine scorers used for lemma ranking.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

SparseVector = dict[int, float]


@dataclass(frozen=True)
class NgramConfig:
    max_n: int = 1

    def __post_init__(self):
        if self.max_n not in (1, 2, 3):
            raise ValueError("max_n must be 1, 2, or 3")


@dataclass
class TfidfModel:
    feature_index: dict[tuple[str, ...], int]
    idf: np.ndarray
    doc_count: int
    max_n: int

    @property
    def n_features(self) -> int:
        return len(self.feature_index)


def _ngrams(tokens: Sequence[str], max_n: int):
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            yield tuple(tokens[i : i + n])


def fit_tfidf(corpus: Iterable, cfg: NgramConfig = NgramConfig()) -> TfidfModel:
    """Build the n-gram feature index and smoothed idf weights.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, where N is the document count
    and df the number of documents containing the n-gram.
    """
    df: Counter[tuple[str, ...]] = Counter()
    n_docs = 0
    for stream in corpus:
        n_docs += 1
        tokens = list(stream)
        df.update(set(_ngrams(tokens, cfg.max_n)))
    if n_docs == 0:
        raise ValueError("corpus must be nonempty")
    feature_index = {g: i for i, g in enumerate(sorted(df))}
    idf = np.empty(len(feature_index))
    for g, i in feature_index.items():
        idf[i] = math.log((1 + n_docs) / (1 + df[g])) + 1.0
    return TfidfModel(feature_index, idf, n_docs, cfg.max_n)


def raw_counts(stream, model: TfidfModel) -> SparseVector:
    """Unweighted n-gram counts restricted to the fitted feature space."""
    vec: SparseVector = {}
    tokens = list(stream)
    index = model.feature_index
    for g in _ngrams(tokens, model.max_n):
        fid = index.get(g)
        if fid is not None:
            vec[fid] = vec.get(fid, 0.0) + 1.0
    return vec


def transform(stream, model: TfidfModel) -> SparseVector:
    """TF-IDF weighted, L2-normalized feature vector; unseen n-grams ignored."""
    vec = raw_counts(stream, model)
    for fid in vec:
        vec[fid] *= model.idf[fid]
    norm = math.sqrt(sum(w * w for w in vec.values()))
    if norm > 0.0:
        for fid in vec:
            vec[fid] /= norm
    return vec


def to_csr(vectors: Sequence[SparseVector], n_features: int) -> sp.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in vectors:
        for fid in sorted(vec):
            indices.append(fid)
            data.append(vec[fid])
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(vectors), n_features),
    )


def sparse_dot(u: SparseVector, v: SparseVector) -> float:
    if len(u) > len(v):
        u, v = v, u
    return sum(w * v[fid] for fid, w in u.items() if fid in v)


def count_score(u_counts: SparseVector, v_counts: SparseVector) -> float:
    """Dot product of raw n-gram counts."""
    return sparse_dot(u_counts, v_counts)


def tfidf_score(u: SparseVector, v: SparseVector) -> float:
    """Cosine similarity of L2-normalized TF-IDF vectors."""
    return sparse_dot(u, v)


# ---------------------------------------------------------------------------
# distance-weighted k-nearest-neighbor classifier

EXACT_MATCH_EPS = 1e-12


@dataclass
class KnnModel:
    matrix: sp.csr_matrix
    row_norm2: np.ndarray
    labels: list[str]
    label_order: list[str]


def knn_train(vectors: Sequence[SparseVector], labels: Sequence[str],
              n_features: int) -> KnnModel:
    if len(vectors) == 0:
        raise ValueError("training set must be nonempty")
    if len(vectors) != len(labels):
        raise ValueError("vectors and labels must align")
    order = sorted(Counter(labels).items(), key=lambda kv: (-kv[1], kv[0]))
    matrix = to_csr(vectors, n_features)
    row_norm2 = np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()
    return KnnModel(matrix, row_norm2, list(labels), [lab for lab, _ in order])


def knn_predict(model: KnnModel, v: SparseVector, k: int = 5) -> list[str]:
    """Commands ranked by summed 1/distance votes of the k nearest neighbors.

    Distances are Euclidean over L2-normalized vectors. A zero-distance
    neighbor outranks every inexact vote. Commands receiving no votes are
    appended in training-frequency order so the ranking is complete.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    k = min(k, model.matrix.shape[0])
    qv = np.zeros(model.matrix.shape[1])
    for fid, w in v.items():
        qv[fid] = w
    sims = model.matrix @ qv
    qnorm2 = float(qv @ qv)
    d2 = np.maximum(0.0, model.row_norm2 + qnorm2 - 2.0 * sims)
    nearest = np.argsort(d2, kind="stable")[:k]
    exact: Counter[str] = Counter()
    votes: Counter[str] = Counter()
    for i in nearest:
        dist = math.sqrt(d2[i])
        label = model.labels[i]
        if dist < EXACT_MATCH_EPS:
            exact[label] += 1
        else:
            votes[label] += 1.0 / dist
    ranked = sorted(
        set(exact) | set(votes),
        key=lambda lab: (-exact[lab], -votes[lab], lab),
    )
    for lab in model.label_order:
        if lab not in exact and lab not in votes:
            ranked.append(lab)
    return ranked


# ---------------------------------------------------------------------------
# multinomial logistic regression

@dataclass
class LinearModel:
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray  # (n_classes,)
    classes: list[str]


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logistic_loss_and_grad(weights, bias, x, y_idx, l2: float):
    """Mean cross-entropy with L2 penalty, plus analytic gradients.

    ``x`` may be dense or CSR with shape (batch, n_features); ``y_idx`` the
    integer class per row.
    """
    n = x.shape[0]
    logits = x @ weights.T + bias
    probs = _softmax_rows(np.asarray(logits))
    nll = -np.mean(np.log(probs[np.arange(n), y_idx] + 1e-300))
    loss = nll + 0.5 * l2 * float((weights * weights).sum())
    delta = probs
    delta[np.arange(n), y_idx] -= 1.0
    delta /= n
    grad_w = np.asarray(delta.T @ x) + l2 * weights
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def linear_train(
    vectors: Sequence[SparseVector],
    labels: Sequence[str],
    n_features: int,
    epochs: int = 30,
    lr: float = 1.0,
    batch_size: int = 64,
    l2: float = 1e-4,
    seed: int = 0,
) -> LinearModel:
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    class_idx = {c: i for i, c in enumerate(classes)}
    y = np.asarray([class_idx[lab] for lab in labels])
    x = to_csr(vectors, n_features)
    w = np.zeros((len(classes), n_features))
    b = np.zeros(len(classes))
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        perm = rng.permutation(len(labels))
        for start in range(0, len(labels), batch_size):
            idx = perm[start : start + batch_size]
            _, gw, gb = logistic_loss_and_grad(w, b, x[idx], y[idx], l2)
            w -= lr * gw
            b -= lr * gb
    return LinearModel(w, b, classes)


def linear_predict(model: LinearModel, v: SparseVector) -> list[str]:
    """Classes ranked by posterior probability (full ranking)."""
    qv = np.zeros(model.weights.shape[1])
    for fid, wt in v.items():
        qv[fid] = wt
    logits = model.weights @ qv + model.bias
    order = sorted(
        range(len(model.classes)), key=lambda i: (-logits[i], model.classes[i])
    )
    return [model.classes[i] for i in order]


def linear_predict_proba(model: LinearModel, v: SparseVector) -> list[tuple[str, float]]:
    qv = np.zeros(model.weights.shape[1])
    for fid, wt in v.items():
        qv[fid] = wt
    logits = (model.weights @ qv + model.bias)[None, :]
    probs = _softmax_rows(logits)[0]
    order = sorted(
        range(len(model.classes)), key=lambda i: (-probs[i], model.classes[i])
    )
    return [(model.classes[i], float(probs[i])) for i in order]


# ---------------------------------------------------------------------------
# persistence

FORMAT_VERSION = 1
_FEATURE_JOIN = "\x1f"


def save_baselines(path, tfidf: TfidfModel, knn: KnnModel | None = None,
                   linear: LinearModel | None = None) -> None:
    features = sorted(tfidf.feature_index, key=tfidf.feature_index.get)
    header = {
        "version": FORMAT_VERSION,
        "max_n": tfidf.max_n,
        "doc_count": tfidf.doc_count,
        "features": [_FEATURE_JOIN.join(g) for g in features],
        "has_knn": knn is not None,
        "has_linear": linear is not None,
    }
    arrays: dict[str, np.ndarray] = {"idf": tfidf.idf}
    if knn is not None:
        header["knn_labels"] = knn.labels
        header["knn_label_order"] = knn.label_order
        arrays["knn_data"] = knn.matrix.data
        arrays["knn_indices"] = knn.matrix.indices
        arrays["knn_indptr"] = knn.matrix.indptr
    if linear is not None:
        header["linear_classes"] = linear.classes
        arrays["linear_w"] = linear.weights
        arrays["linear_b"] = linear.bias
    np.savez_compressed(path, __header__=np.frombuffer(
        json.dumps(header).encode("utf-8"), dtype=np.uint8), **arrays)


def load_baselines(path):
    with np.load(path) as z:
        header = json.loads(bytes(z["__header__"]).decode("utf-8"))
        if header["version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported baselines format {header['version']}")
        feature_index = {
            tuple(f.split(_FEATURE_JOIN)): i
            for i, f in enumerate(header["features"])
        }
        tfidf = TfidfModel(feature_index, z["idf"], header["doc_count"],
                           header["max_n"])
        knn = None
        if header["has_knn"]:
            matrix = sp.csr_matrix(
                (z["knn_data"], z["knn_indices"], z["knn_indptr"]),
                shape=(len(header["knn_labels"]), len(feature_index)),
            )
            row_norm2 = np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()
            knn = KnnModel(matrix, row_norm2, header["knn_labels"],
                           header["knn_label_order"])
        linear = None
        if header["has_linear"]:
            linear = LinearModel(z["linear_w"], z["linear_b"],
                                 header["linear_classes"])
    return tfidf, knn, linear
