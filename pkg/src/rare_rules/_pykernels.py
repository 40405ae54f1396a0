"""Numpy bit-row kernels, used when the compiled extension is unavailable.

Both functions take the item bit rows as a C-contiguous ``uint64`` array of
shape ``(n_items, n_words)`` and candidates as an ``int64`` array of shape
``(n_candidates, width)`` holding item indices (all candidates in one call
share the same length).
"""
import numpy as np

# Bounds the temporary (chunk, n_words) intersection buffer.
_CHUNK_WORDS = 1 << 21


def _popcount_rows(words):
    return np.bitwise_count(words).sum(axis=1, dtype=np.int64)


def pattern_masks(cols, cand):
    n_cand, width = cand.shape
    out = np.zeros((n_cand, cols.shape[1]), dtype=np.uint64)
    if width == 0 or n_cand == 0:
        return out
    np.copyto(out, cols[cand[:, 0]])
    for j in range(1, width):
        np.bitwise_and(out, cols[cand[:, j]], out=out)
    return out


def count_candidates(cols, labels, cand):
    n_cand = cand.shape[0]
    supp = np.zeros(n_cand, dtype=np.int64)
    conf = np.zeros(n_cand, dtype=np.int64)
    if cand.shape[1] == 0 or n_cand == 0:
        return supp, conf
    step = max(1, _CHUNK_WORDS // max(1, cols.shape[1]))
    for lo in range(0, n_cand, step):
        acc = pattern_masks(cols, cand[lo:lo + step])
        supp[lo:lo + step] = _popcount_rows(acc)
        np.bitwise_and(acc, labels, out=acc)
        conf[lo:lo + step] = _popcount_rows(acc)
    return supp, conf
