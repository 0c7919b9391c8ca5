"""Pure-Python/numpy fallback for the compiled kernels.

Bucket counts are integer-exact and therefore bitwise-identical to the
compiled backend. Row-wise dots use numpy's pairwise summation, which can
differ from the compiled left-to-right accumulation in the last ulp; callers
must not rely on cross-backend bit equality of scores (ties in retrieval are
only exercised by bit-identical vectors, where both backends agree exactly).
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def trigram_bucket_counts(text: str, dims: int) -> np.ndarray:
    """Count hashed character trigrams of ``text`` into ``dims`` buckets."""
    out = np.zeros(dims, dtype=np.float64)
    n = len(text)
    for i in range(n - 2):
        h = _FNV_OFFSET
        for ch in text[i : i + 3]:
            cp = ord(ch)
            for s in (0, 8, 16, 24):
                h = ((h ^ ((cp >> s) & 0xFF)) * _FNV_PRIME) & _MASK64
        out[h % dims] += 1.0
    return out


def rowwise_dot(mat: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Dot product of every row of ``mat`` with ``q``."""
    if mat.shape[1] != q.shape[0]:
        raise ValueError("vector length does not match matrix width")
    return mat @ q
