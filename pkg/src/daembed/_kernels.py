"""Hot inner loops, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports and ``DAEMB_DISABLE_NUMBA`` is not
set to a truthy value. Both paths are always importable as ``*_numpy`` /
``*_numba`` so tests and benchmarks can compare them directly.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_DISABLED = os.environ.get("DAEMB_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# windowed co-occurrence counts
# ---------------------------------------------------------------------------

def cooccurrence_numpy(ids, offsets, window, n_words):
    """Dense symmetric counts of token pairs within ``window`` positions.

    A pair of distinct words bumps both (a, b) and (b, a); a word paired
    with itself bumps the diagonal once.

    ``ids`` is the concatenation of all documents with out-of-vocabulary
    positions marked -1 (skipped, but still occupying a position);
    ``offsets`` holds the document boundaries (length n_docs + 1).
    """
    counts = np.zeros((n_words, n_words), dtype=np.float64)
    doc_of = np.repeat(np.arange(len(offsets) - 1), np.diff(offsets))
    for k in range(1, window + 1):
        if k >= len(ids):
            break
        a, b = ids[:-k], ids[k:]
        keep = (doc_of[:-k] == doc_of[k:]) & (a >= 0) & (b >= 0)
        a, b = a[keep], b[keep]
        np.add.at(counts, (a, b), 1.0)
        off = a != b
        np.add.at(counts, (b[off], a[off]), 1.0)
    return counts


# ---------------------------------------------------------------------------
# masked max-over-time pooling and its gradient scatter
# ---------------------------------------------------------------------------

def max_over_time_numpy(z, n_valid):
    """Per-feature max over the first ``n_valid[b]`` steps of ``z[b]``.

    Returns the pooled (B, F) values and the (B, F) argmax positions; ties go
    to the earliest step.
    """
    B, T, F = z.shape
    steps = np.arange(T)[None, :, None]
    masked = np.where(steps < n_valid[:, None, None], z, -np.inf)
    arg = masked.argmax(axis=1)
    pooled = np.take_along_axis(z, arg[:, None, :], axis=1)[:, 0, :]
    return pooled, arg


def scatter_max_grad_numpy(upstream, arg, T):
    B, F = upstream.shape
    out = np.zeros((B, T, F), dtype=upstream.dtype)
    b_idx = np.arange(B)[:, None]
    f_idx = np.arange(F)[None, :]
    out[b_idx, arg, f_idx] = upstream
    return out


# ---------------------------------------------------------------------------
# sliding-window fold (col2im): gradient of the window unfold
# ---------------------------------------------------------------------------

def fold_windows_numpy(d_windows, T):
    """Sum window gradients (B, T', k, d) back onto the (B, T, d) sequence."""
    B, Tp, k, d = d_windows.shape
    out = np.zeros((B, T, d), dtype=d_windows.dtype)
    for j in range(k):
        out[:, j:j + Tp, :] += d_windows[:, :, j, :]
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def cooccurrence_numba(ids, offsets, window, n_words):
        counts = np.zeros((n_words, n_words), dtype=np.float64)
        for doc in range(len(offsets) - 1):
            lo, hi = offsets[doc], offsets[doc + 1]
            for i in range(lo, hi):
                a = ids[i]
                if a < 0:
                    continue
                stop = min(hi, i + window + 1)
                for j in range(i + 1, stop):
                    b = ids[j]
                    if b < 0:
                        continue
                    counts[a, b] += 1.0
                    if a != b:
                        counts[b, a] += 1.0
        return counts

    @njit(cache=True)
    def max_over_time_numba(z, n_valid):
        B, T, F = z.shape
        pooled = np.empty((B, F), dtype=z.dtype)
        arg = np.zeros((B, F), dtype=np.int64)
        for b in range(B):
            n = n_valid[b]
            for f in range(F):
                best = z[b, 0, f]
                at = 0
                for t in range(1, n):
                    if z[b, t, f] > best:
                        best = z[b, t, f]
                        at = t
                pooled[b, f] = best
                arg[b, f] = at
        return pooled, arg

    @njit(cache=True)
    def scatter_max_grad_numba(upstream, arg, T):
        B, F = upstream.shape
        out = np.zeros((B, T, F), dtype=upstream.dtype)
        for b in range(B):
            for f in range(F):
                out[b, arg[b, f], f] = upstream[b, f]
        return out

    @njit(cache=True)
    def fold_windows_numba(d_windows, T):
        B, Tp, k, d = d_windows.shape
        out = np.zeros((B, T, d), dtype=d_windows.dtype)
        for b in range(B):
            for j in range(k):
                for t in range(Tp):
                    for c in range(d):
                        out[b, t + j, c] += d_windows[b, t, j, c]
        return out

else:  # pragma: no cover
    cooccurrence_numba = cooccurrence_numpy
    max_over_time_numba = max_over_time_numpy
    scatter_max_grad_numba = scatter_max_grad_numpy
    fold_windows_numba = fold_windows_numpy


def cooccurrence(ids, offsets, window, n_words):
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    fn = cooccurrence_numba if USE_NUMBA else cooccurrence_numpy
    return fn(ids, offsets, int(window), int(n_words))


def max_over_time(z, n_valid):
    n_valid = np.ascontiguousarray(n_valid, dtype=np.int64)
    if USE_NUMBA:
        return max_over_time_numba(np.ascontiguousarray(z), n_valid)
    return max_over_time_numpy(z, n_valid)


def scatter_max_grad(upstream, arg, T):
    if USE_NUMBA:
        return scatter_max_grad_numba(np.ascontiguousarray(upstream),
                                      np.ascontiguousarray(arg, dtype=np.int64), int(T))
    return scatter_max_grad_numpy(upstream, arg, T)


def fold_windows(d_windows, T):
    if USE_NUMBA:
        return fold_windows_numba(np.ascontiguousarray(d_windows), int(T))
    return fold_windows_numpy(d_windows, T)
