"""Kernel backend selection.

The compiled Cython module is preferred when present; the pure-Python
fallback is always available. Set PROOFREC_PURE=1 to force the fallback.
"""

import os

if os.environ.get("PROOFREC_PURE") == "1":
    from proofrec._kernels import pure as _impl

    BACKEND = "pure"
else:
    try:
        from proofrec._kernels import _bpe_cy as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from proofrec._kernels import pure as _impl

        BACKEND = "pure"

count_pairs = _impl.count_pairs
merge_word = _impl.merge_word
encode_word = _impl.encode_word

__all__ = ["BACKEND", "count_pairs", "merge_word", "encode_word"]
