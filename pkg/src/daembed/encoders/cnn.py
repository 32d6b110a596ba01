"""Kim-style CNN sentence encoder.

One bank of filters per width, ReLU, max over the valid time steps, banks
concatenated, inverted dropout on the result in training mode. Each sequence
is zero-padded to at least the widest filter; windows past a sequence's own
padded length are masked out of the max, so a batch's padding never changes a
sentence's encoding.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .. import _kernels
from .layers import dropout_mask


def init_cnn(rng: np.random.Generator, dim: int, widths: Sequence[int], maps: int) -> dict:
    params = {}
    for k in widths:
        params[f"cnn_W{k}"] = rng.standard_normal((k * dim, maps)) / np.sqrt(k * dim)
        params[f"cnn_b{k}"] = np.zeros(maps)
    return params


def _windows(x: np.ndarray, k: int) -> np.ndarray:
    """(B, T, d) -> (B, T-k+1, k, d) view of consecutive windows."""
    return sliding_window_view(x, k, axis=1).transpose(0, 1, 3, 2)


def cnn_forward(params: dict, x: np.ndarray, lengths: np.ndarray, widths: Sequence[int],
                dropout: float = 0.0, rng: np.random.Generator | None = None):
    """Encode padded input ``x`` (B, T, d) with ``T >= max(widths)``.

    ``lengths`` are the padded per-sequence lengths (each >= max(widths)).
    ``rng=None`` selects evaluation mode (no dropout).
    """
    B, T, d = x.shape
    pooled, banks = [], []
    for k in widths:
        win = _windows(x, k)
        flat = np.ascontiguousarray(win).reshape(B, T - k + 1, k * d)
        z = (flat.reshape(-1, k * d) @ params[f"cnn_W{k}"]).reshape(B, T - k + 1, -1)
        z += params[f"cnn_b{k}"]
        r = np.maximum(z, 0.0)
        h, arg = _kernels.max_over_time(r, lengths - k + 1)
        pooled.append(h)
        banks.append((k, flat, z, arg))
    out = np.concatenate(pooled, axis=1)
    mask = None
    if rng is not None and dropout > 0:
        mask = dropout_mask(rng, out.shape, dropout)
        out = out * mask
    return out, (x.shape, tuple(widths), banks, mask)


def cnn_backward(params: dict, cache, upstream: np.ndarray):
    """Gradients of the parameters and of the input word vectors."""
    (B, T, d), widths, banks, mask = cache
    if mask is not None:
        upstream = upstream * mask
    grads = {}
    dx = np.zeros((B, T, d))
    start = 0
    for k, flat, z, arg in banks:
        maps = z.shape[2]
        dh = np.ascontiguousarray(upstream[:, start:start + maps])
        start += maps
        dz = _kernels.scatter_max_grad(dh, arg, z.shape[1])
        dz *= z > 0
        grads[f"cnn_W{k}"] = flat.reshape(-1, k * d).T @ dz.reshape(-1, maps)
        grads[f"cnn_b{k}"] = dz.sum(axis=(0, 1))
        dwin = (dz.reshape(-1, maps) @ params[f"cnn_W{k}"].T).reshape(B, T - k + 1, k, d)
        dx += _kernels.fold_windows(dwin, T)
    return grads, dx
