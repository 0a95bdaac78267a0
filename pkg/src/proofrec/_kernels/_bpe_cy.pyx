# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled subword merge kernels; same contract as ``pure``."""

import numpy as np


def count_pairs(list words, freqs):
    cdef dict counts = {}
    cdef const long long[:] fv = np.ascontiguousarray(freqs, dtype=np.int64)
    cdef const int[:] w
    cdef Py_ssize_t wi, i, n
    cdef long long f, key
    cdef object cur
    for wi in range(len(words)):
        w = words[wi]
        n = w.shape[0]
        if n < 2:
            continue
        f = fv[wi]
        for i in range(n - 1):
            key = ((<long long> w[i]) << 32) | (<long long> w[i + 1])
            cur = counts.get(key)
            if cur is None:
                counts[key] = f
            else:
                counts[key] = (<long long> cur) + f
    return counts


def merge_word(word, int a, int b, int new_id):
    cdef const int[:] w = word
    cdef Py_ssize_t n = w.shape[0]
    out_arr = np.empty(n, dtype=np.int32)
    cdef int[:] out = out_arr
    cdef Py_ssize_t i = 0, j = 0
    while i < n:
        if i + 1 < n and w[i] == a and w[i + 1] == b:
            out[j] = new_id
            i += 2
        else:
            out[j] = w[i]
            i += 1
        j += 1
    return out_arr[:j].copy()


def encode_word(word, dict rank_and_id):
    cdef int[:] buf = np.ascontiguousarray(word, dtype=np.int32).copy()
    cdef Py_ssize_t n = buf.shape[0]
    cdef Py_ssize_t i, j
    cdef long long key, best_val, val
    cdef int best_a, best_b, new_id
    cdef object hit
    while n >= 2:
        best_val = -1
        best_a = best_b = 0
        for i in range(n - 1):
            key = ((<long long> buf[i]) << 32) | (<long long> buf[i + 1])
            hit = rank_and_id.get(key)
            if hit is not None:
                val = <long long> hit
                if best_val < 0 or val < best_val:
                    best_val = val
                    best_a = buf[i]
                    best_b = buf[i + 1]
        if best_val < 0:
            break
        new_id = <int> (best_val & 0xFFFFFFFF)
        i = 0
        j = 0
        while i < n:
            if i + 1 < n and buf[i] == best_a and buf[i + 1] == best_b:
                buf[j] = new_id
                i += 2
            else:
                buf[j] = buf[i]
                i += 1
            j += 1
        n = j
    return np.asarray(buf[:n]).copy()
