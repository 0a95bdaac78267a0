"""Pure-Python reference implementation of the subword merge kernels.

Operates on words encoded as int32 numpy arrays of symbol ids. Pair keys are
packed as ``(left << 32) | right``; the compiled module in ``_bpe_cy`` must
match these semantics exactly (the test suite checks parity).
"""

from __future__ import annotations

import numpy as np


def count_pairs(words, freqs) -> dict[int, int]:
    """Counts of all adjacent symbol pairs, weighted by word frequency.

    Adjacent positions are counted with overlap, e.g. "aaa" contributes the
    pair (a, a) twice.
    """
    counts: dict[int, int] = {}
    for w, f in zip(words, freqs):
        f = int(f)
        prev = None
        for s in w:
            s = int(s)
            if prev is not None:
                key = (prev << 32) | s
                counts[key] = counts.get(key, 0) + f
            prev = s
    return counts


def merge_word(word, a: int, b: int, new_id: int):
    """Replace occurrences of the pair (a, b) left to right with new_id."""
    out = []
    i = 0
    n = len(word)
    while i < n:
        if i + 1 < n and word[i] == a and word[i + 1] == b:
            out.append(new_id)
            i += 2
        else:
            out.append(int(word[i]))
            i += 1
    return np.asarray(out, dtype=np.int32)


def encode_word(word, rank_and_id: dict[int, int]):
    """Apply trained merges to one word, lowest rank first.

    ``rank_and_id`` maps a packed pair key to ``(rank << 32) | new_id``.
    Replays the training order: the best-ranked pair present is merged at
    all its positions, then the scan repeats.
    """
    syms = [int(s) for s in word]
    while len(syms) >= 2:
        best_val = -1
        best_a = best_b = 0
        for i in range(len(syms) - 1):
            key = (syms[i] << 32) | syms[i + 1]
            val = rank_and_id.get(key)
            if val is not None and (best_val < 0 or val < best_val):
                best_val = val
                best_a, best_b = syms[i], syms[i + 1]
        if best_val < 0:
            break
        new_id = best_val & 0xFFFFFFFF
        out = []
        i = 0
        while i < len(syms):
            if i + 1 < len(syms) and syms[i] == best_a and syms[i + 1] == best_b:
                out.append(new_id)
                i += 2
            else:
                out.append(syms[i])
                i += 1
        syms = out
    return np.asarray(syms, dtype=np.int32)
