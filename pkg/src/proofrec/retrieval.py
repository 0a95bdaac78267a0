"""Lemma index with precomputed representations and pluggable scorers.

The index stores, per library lemma, a dense mean-pooled encoder embedding
(when a trained encoder is supplied), sparse TF-IDF and raw-count vectors
(when a fitted TF-IDF model is supplied), and always a seeded random scorer.
Ranking scores every lemma, sorts descending, and breaks ties by ascending
lemma id so results are reproducible; the tie count is reported alongside.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from proofrec.baselines import TfidfModel, raw_counts, to_csr, transform
from proofrec.corpus import LemmaRecord, SequentState, term_from_obj, term_to_obj
from proofrec.encoder.model import EncoderParameters, encoder_forward, mean_pool, pad_batch
from proofrec.featurize import (
    BASE_TYPE_NAMES,
    FeaturizeMode,
    featurize_lemma,
    featurize_sequent,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LemmaLibrary:
    lemmas: tuple[LemmaRecord, ...]
    theory_index: dict[str, tuple[str, ...]] = field(init=False)

    def __post_init__(self):
        ids = [l.lemma_id for l in self.lemmas]
        if len(set(ids)) != len(ids):
            raise ValueError("lemma ids must be unique")
        by_theory: dict[str, list[str]] = {}
        for l in self.lemmas:
            by_theory.setdefault(l.theory, []).append(l.lemma_id)
        object.__setattr__(
            self, "theory_index",
            {t: tuple(v) for t, v in sorted(by_theory.items())})

    def __len__(self):
        return len(self.lemmas)


@dataclass(frozen=True)
class RankedResult:
    entries: tuple[tuple[str, float], ...]
    tie_count: int

    @property
    def ids(self) -> list[str]:
        return [e[0] for e in self.entries]

    def rank_of(self, lemma_id: str) -> int:
        """1-based rank; raises if the lemma is not in the result."""
        for i, (lid, _) in enumerate(self.entries):
            if lid == lemma_id:
                return i + 1
        raise ValueError(f"lemma {lemma_id!r} not present in ranking")


def _query_seed(base_seed: int, tokens) -> list[int]:
    digest = hashlib.blake2b(
        "\x1f".join(tokens).encode("utf-8"), digest_size=8).digest()
    return [base_seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest, "big")]


class LemmaIndex:
    """Immutable after build; safe for concurrent ranking calls."""

    def __init__(self, library: LemmaLibrary, *,
                 params: EncoderParameters | None = None,
                 codec=None,
                 tfidf: TfidfModel | None = None,
                 random_seed: int = 0,
                 known_types: frozenset[str] = BASE_TYPE_NAMES,
                 fingerprints: dict | None = None):
        if len(library) == 0:
            raise ValueError("library must be nonempty")
        self.library = library
        self.lemma_ids = [l.lemma_id for l in library.lemmas]
        self.by_id = {l.lemma_id: l for l in library.lemmas}
        self.params = params
        self.codec = codec
        self.tfidf = tfidf
        self.random_seed = random_seed
        self.known_types = known_types
        self.fingerprints = dict(fingerprints or {})

        self.dense: np.ndarray | None = None
        self.dense_unit: np.ndarray | None = None
        self.sparse: sp.csr_matrix | None = None
        self.counts: sp.csr_matrix | None = None

        streams = [featurize_lemma(l, known_types) for l in library.lemmas]
        if params is not None and codec is not None:
            self.dense = self._embed_streams(streams)
            norms = np.linalg.norm(self.dense, axis=1, keepdims=True)
            self.dense_unit = np.where(norms > 0, self.dense / np.maximum(norms, 1e-300), 0.0)
        if tfidf is not None:
            self.sparse = to_csr([transform(s, tfidf) for s in streams],
                                 tfidf.n_features)
            self.counts = to_csr([raw_counts(s, tfidf) for s in streams],
                                 tfidf.n_features)

    def _embed_streams(self, streams, batch_size: int = 64) -> np.ndarray:
        max_len = self.params.config.max_len
        seqs = [self.codec.encode(s)[:max_len] for s in streams]
        out = np.empty((len(seqs), self.params.config.d_model))
        for start in range(0, len(seqs), batch_size):
            chunk = seqs[start : start + batch_size]
            ids = pad_batch(chunk)
            h, cache = encoder_forward(self.params, ids)
            out[start : start + len(chunk)] = mean_pool(h, cache["mask"])
        return out

    @property
    def scorers(self) -> list[str]:
        names = ["random"]
        if self.dense_unit is not None:
            names.append("siamese")
        if self.sparse is not None:
            names.extend(["tfidf", "count"])
        return sorted(names)

    def _query_tokens(self, sequent: SequentState):
        return list(featurize_sequent(sequent, FeaturizeMode.TYPED,
                                      self.known_types))

    def score(self, scorer: str, sequent: SequentState) -> np.ndarray:
        """Score every library lemma against the query sequent."""
        if scorer == "random":
            rng = np.random.default_rng(
                _query_seed(self.random_seed, self._query_tokens(sequent)))
            return rng.random(len(self.lemma_ids))
        if scorer == "siamese":
            if self.dense_unit is None:
                raise ValueError("siamese scorer not registered on this index")
            tokens = self._query_tokens(sequent)
            ids = self.codec.encode(tokens)[: self.params.config.max_len]
            h, cache = encoder_forward(self.params,
                                       pad_batch([ids]))
            u = mean_pool(h, cache["mask"])[0]
            norm = float(np.linalg.norm(u))
            if norm == 0.0:
                logger.warning("zero-norm query embedding; scoring 0 for all")
                return np.zeros(len(self.lemma_ids))
            return self.dense_unit @ (u / norm)
        if scorer == "tfidf":
            if self.sparse is None:
                raise ValueError("tfidf scorer not registered on this index")
            q = transform(self._query_tokens(sequent), self.tfidf)
            return self._sparse_scores(self.sparse, q)
        if scorer == "count":
            if self.counts is None:
                raise ValueError("count scorer not registered on this index")
            q = raw_counts(self._query_tokens(sequent), self.tfidf)
            return self._sparse_scores(self.counts, q)
        raise ValueError(f"unknown scorer {scorer!r}")

    def _sparse_scores(self, matrix: sp.csr_matrix, q: dict) -> np.ndarray:
        qv = np.zeros(matrix.shape[1])
        for fid, w in q.items():
            qv[fid] = w
        return matrix @ qv


def build_index(library: LemmaLibrary, *, params=None, codec=None,
                tfidf=None, random_seed: int = 0,
                known_types: frozenset[str] = BASE_TYPE_NAMES,
                fingerprints: dict | None = None) -> LemmaIndex:
    return LemmaIndex(library, params=params, codec=codec, tfidf=tfidf,
                      random_seed=random_seed, known_types=known_types,
                      fingerprints=fingerprints)


def rank_lemmas(sequent: SequentState, index: LemmaIndex, scorer: str,
                top_k: int | None = None) -> RankedResult:
    """Full descending ranking (ties by ascending lemma id), then truncation."""
    scores = index.score(scorer, sequent)
    ids = index.lemma_ids
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    tie_count = len(ids) - len(np.unique(scores))
    entries = tuple((ids[i], float(scores[i])) for i in order)
    if top_k is not None:
        if top_k < 1:
            raise ValueError("top_k must be at least 1")
        entries = entries[:top_k]
    return RankedResult(entries, tie_count)


# ---------------------------------------------------------------------------
# persistence

FORMAT_VERSION = 1


def save_index(path, index: LemmaIndex) -> None:
    header = {
        "version": FORMAT_VERSION,
        "random_seed": index.random_seed,
        "known_types": sorted(index.known_types),
        "fingerprints": index.fingerprints,
        "lemmas": [
            {"id": l.lemma_id, "theory": l.theory,
             "statement": term_to_obj(l.statement)}
            for l in index.library.lemmas
        ],
        "has_dense": index.dense is not None,
        "has_sparse": index.sparse is not None,
    }
    arrays = {}
    if index.dense is not None:
        arrays["dense"] = index.dense
    if index.sparse is not None:
        for name, m in (("sparse", index.sparse), ("counts", index.counts)):
            arrays[f"{name}_data"] = m.data
            arrays[f"{name}_indices"] = m.indices
            arrays[f"{name}_indptr"] = m.indptr
        arrays["n_features"] = np.asarray([index.sparse.shape[1]])
    np.savez_compressed(path, __header__=np.frombuffer(
        json.dumps(header).encode("utf-8"), dtype=np.uint8), **arrays)


def load_index(path, *, params=None, codec=None, tfidf=None) -> LemmaIndex:
    """Rebuild an index from its container plus the live artifacts.

    The stored lemma-side arrays are reused verbatim; the caller supplies
    the artifacts needed for query-side scoring. Fingerprints recorded at
    save time are returned for the caller to verify against its artifacts.
    """
    with np.load(path) as z:
        header = json.loads(bytes(z["__header__"]).decode("utf-8"))
        if header["version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported index version {header['version']}")
        lemmas = tuple(
            LemmaRecord(o["id"], o["theory"], term_from_obj(o["statement"]))
            for o in header["lemmas"]
        )
        index = LemmaIndex.__new__(LemmaIndex)
        library = LemmaLibrary(lemmas)
        index.library = library
        index.lemma_ids = [l.lemma_id for l in lemmas]
        index.by_id = {l.lemma_id: l for l in lemmas}
        index.params = params
        index.codec = codec
        index.tfidf = tfidf
        index.random_seed = header["random_seed"]
        index.known_types = frozenset(header["known_types"])
        index.fingerprints = header["fingerprints"]
        index.dense = z["dense"] if header["has_dense"] else None
        if index.dense is not None:
            norms = np.linalg.norm(index.dense, axis=1, keepdims=True)
            index.dense_unit = np.where(
                norms > 0, index.dense / np.maximum(norms, 1e-300), 0.0)
        else:
            index.dense_unit = None
        if header["has_sparse"]:
            n_features = int(z["n_features"][0])
            n = len(lemmas)
            index.sparse = sp.csr_matrix(
                (z["sparse_data"], z["sparse_indices"], z["sparse_indptr"]),
                shape=(n, n_features))
            index.counts = sp.csr_matrix(
                (z["counts_data"], z["counts_indices"], z["counts_indptr"]),
                shape=(n, n_features))
        else:
            index.sparse = None
            index.counts = None
    if index.dense is not None and (params is None or codec is None):
        logger.warning("index has dense embeddings but no encoder artifacts; "
                       "siamese scorer disabled")
        index.dense_unit = None
    if index.sparse is not None and tfidf is None:
        logger.warning("index has sparse vectors but no TF-IDF model; "
                       "tfidf/count scorers disabled")
        index.sparse = None
        index.counts = None
    return index
