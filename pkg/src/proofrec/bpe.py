"""Byte-pair vocabulary training and application over featurized streams.

A "word" is one featurized token; its characters are the base symbols, with
an end-of-word sentinel appended so decoding can recover token boundaries.
Merges never cross word boundaries and never touch the reserved special
tokens. Training is deterministic: the most frequent adjacent pair wins,
with ties broken by lexicographic order of the (left, right) symbol pair.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from proofrec import _kernels
from proofrec.featurize import TokenStream
from proofrec.tokens import SPECIAL_SET, SPECIAL_TOKENS, UNK

EOW = "</w>"

MIN_PAIR_FREQ = 2


@dataclass(frozen=True)
class MergeTable:
    merges: tuple[tuple[str, str], ...]

    def __len__(self):
        return len(self.merges)


class Vocab:
    """Bijective token/id map; ids 0..n-1 in creation order, specials first."""

    def __init__(self, symbols: Sequence[str]):
        self.id_to_token = list(symbols)
        self.token_to_id = {t: i for i, t in enumerate(symbols)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("vocabulary symbols must be unique")
        for tok in SPECIAL_TOKENS:
            if tok not in self.token_to_id:
                raise ValueError(f"special token {tok!r} missing from vocabulary")

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id[token]


def _pack(a: int, b: int) -> int:
    return (a << 32) | b


def train_bpe(
    corpus: Iterable[TokenStream],
    vocab_budget: int,
    min_pair_freq: int = MIN_PAIR_FREQ,
) -> tuple[MergeTable, Vocab]:
    """Learn a merge table and vocabulary from featurized streams.

    The budget counts everything: special tokens, base characters (plus the
    end-of-word sentinel), and merge products. Merging stops when the budget
    is reached or no pair occurs at least ``min_pair_freq`` times.
    """
    word_counts: Counter[str] = Counter()
    for stream in corpus:
        for tok in stream:
            if tok not in SPECIAL_SET:
                word_counts[tok] += 1
    if not word_counts:
        raise ValueError("corpus contains no trainable tokens")

    alphabet = sorted({ch for w in word_counts for ch in w})
    symbols = list(SPECIAL_TOKENS) + alphabet + [EOW]
    if vocab_budget <= len(symbols):
        raise ValueError(
            f"vocab_budget {vocab_budget} too small: need more than "
            f"{len(symbols)} (specials + base alphabet)"
        )
    sym_id = {s: i for i, s in enumerate(symbols)}
    eow_id = sym_id[EOW]

    words = []
    freqs = []
    for w, f in sorted(word_counts.items()):
        words.append(
            np.asarray([sym_id[ch] for ch in w] + [eow_id], dtype=np.int32)
        )
        freqs.append(f)
    freqs = np.asarray(freqs, dtype=np.int64)

    merges: list[tuple[str, str]] = []
    while len(symbols) < vocab_budget:
        counts = _kernels.count_pairs(words, freqs)
        if not counts:
            break
        best_count = max(counts.values())
        if best_count < min_pair_freq:
            break
        tied = [k for k, v in counts.items() if v == best_count]
        key = min(tied, key=lambda k: (symbols[k >> 32], symbols[k & 0xFFFFFFFF]))
        a, b = key >> 32, key & 0xFFFFFFFF
        new_id = len(symbols)
        symbols.append(symbols[a] + symbols[b])
        merges.append((symbols[a], symbols[b]))
        words = [_kernels.merge_word(w, a, b, new_id) for w in words]
    return MergeTable(tuple(merges)), Vocab(symbols)


class BpeCodec:
    """Applies a trained merge table; reusable across many streams."""

    def __init__(self, merges: MergeTable, vocab: Vocab):
        self.merges = merges
        self.vocab = vocab
        self._rank_and_id: dict[int, int] = {}
        for rank, (left, right) in enumerate(merges.merges):
            a = vocab.token_to_id[left]
            b = vocab.token_to_id[right]
            new_id = vocab.token_to_id[left + right]
            self._rank_and_id[_pack(a, b)] = (rank << 32) | new_id
        self._unk_id = vocab.token_to_id[UNK]
        self._word_cache: dict[str, list[int]] = {}

    def encode_token(self, token: str) -> list[int]:
        if token in SPECIAL_SET:
            return [self.vocab.token_to_id[token]]
        cached = self._word_cache.get(token)
        if cached is not None:
            return cached
        t2i = self.vocab.token_to_id
        raw = [t2i.get(ch, self._unk_id) for ch in token]
        raw.append(self.vocab.token_to_id[EOW])
        ids = list(
            _kernels.encode_word(np.asarray(raw, dtype=np.int32), self._rank_and_id)
        )
        ids = [int(i) for i in ids]
        self._word_cache[token] = ids
        return ids

    def encode(self, stream: TokenStream | Sequence[str]) -> list[int]:
        out: list[int] = []
        for tok in stream:
            out.extend(self.encode_token(tok))
        return out

    def decode(self, ids: Sequence[int]) -> TokenStream:
        tokens: list[str] = []
        buf = ""
        for i in ids:
            i = int(i)
            if not 0 <= i < len(self.vocab.id_to_token):
                raise ValueError(f"unknown token id {i}")
            sym = self.vocab.id_to_token[i]
            if sym in SPECIAL_SET:
                if buf:
                    tokens.append(buf)
                    buf = ""
                tokens.append(sym)
            else:
                buf += sym
                if buf.endswith(EOW):
                    tokens.append(buf[: -len(EOW)])
                    buf = ""
        if buf:
            tokens.append(buf)
        return TokenStream(tuple(tokens))


def encode(stream, merges: MergeTable, vocab: Vocab) -> list[int]:
    return BpeCodec(merges, vocab).encode(stream)


def decode(ids, vocab: Vocab) -> TokenStream:
    return BpeCodec(MergeTable(()), vocab).decode(ids)


# ---------------------------------------------------------------------------
# persistence

MERGES_FILE = "merges.jsonl"
VOCAB_FILE = "vocab.jsonl"


def _merges_bytes(merges: MergeTable) -> bytes:
    lines = [json.dumps(list(p), ensure_ascii=True) for p in merges.merges]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def _vocab_bytes(vocab: Vocab) -> bytes:
    lines = [
        json.dumps([t, i], ensure_ascii=True)
        for i, t in enumerate(vocab.id_to_token)
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")


def tokenizer_fingerprint(merges: MergeTable, vocab: Vocab) -> str:
    h = hashlib.sha256()
    h.update(_merges_bytes(merges))
    h.update(b"\x00")
    h.update(_vocab_bytes(vocab))
    return h.hexdigest()


def save_tokenizer(dirpath, merges: MergeTable, vocab: Vocab) -> None:
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    (d / MERGES_FILE).write_bytes(_merges_bytes(merges))
    (d / VOCAB_FILE).write_bytes(_vocab_bytes(vocab))


def load_tokenizer(dirpath) -> tuple[MergeTable, Vocab]:
    d = Path(dirpath)
    merges = []
    text = (d / MERGES_FILE).read_text(encoding="utf-8")
    for line in text.splitlines():
        if line:
            left, right = json.loads(line)
            merges.append((left, right))
    symbols = []
    for line in (d / VOCAB_FILE).read_text(encoding="utf-8").splitlines():
        if line:
            tok, i = json.loads(line)
            if i != len(symbols):
                raise ValueError(f"vocab ids out of order at {i}")
            symbols.append(tok)
    return MergeTable(tuple(merges)), Vocab(symbols)
