"""BiLSTM sentence encoder with element-wise max pooling over time.

Gate layout along the 4h axis is (input, forget, output, candidate). The
backward direction reads each sequence reversed within its own length, so
trailing padding never leaks into valid states.
"""
from __future__ import annotations

import numpy as np

from .. import _kernels
from .layers import dropout_mask


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_bilstm(rng: np.random.Generator, dim: int, hidden: int) -> dict:
    scale = 1.0 / np.sqrt(hidden)
    params = {}
    for tag in ("f", "b"):
        params[f"lstm_{tag}_Wx"] = rng.uniform(-scale, scale, (dim, 4 * hidden))
        params[f"lstm_{tag}_Wh"] = rng.uniform(-scale, scale, (hidden, 4 * hidden))
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0  # forget gate starts open
        params[f"lstm_{tag}_b"] = bias
    return params


def _reverse_index(lengths: np.ndarray, T: int) -> np.ndarray:
    t = np.arange(T)[None, :]
    n = lengths[:, None]
    return np.where(t < n, n - 1 - t, t)


def _run(wx, wh, b, x):
    B, T, _ = x.shape
    hidden = wh.shape[0]
    h = np.zeros((B, hidden))
    c = np.zeros((B, hidden))
    hs = np.empty((B, T, hidden))
    steps = []
    xw = x @ wx + b
    for t in range(T):
        a = xw[:, t] + h @ wh
        i = _sigmoid(a[:, :hidden])
        f = _sigmoid(a[:, hidden:2 * hidden])
        o = _sigmoid(a[:, 2 * hidden:3 * hidden])
        g = np.tanh(a[:, 3 * hidden:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        steps.append((h_prev, c_prev, i, f, o, g, tc))
    return hs, steps


def _run_backward(wx, wh, x, steps, dhs):
    B, T, _ = x.shape
    hidden = wh.shape[0]
    dwh = np.zeros_like(wh)
    da_all = np.empty((B, T, 4 * hidden))
    dh_next = np.zeros((B, hidden))
    dc_next = np.zeros((B, hidden))
    for t in range(T - 1, -1, -1):
        h_prev, c_prev, i, f, o, g, tc = steps[t]
        dh = dhs[:, t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        da = np.concatenate([dc * g * i * (1.0 - i),
                             dc * c_prev * f * (1.0 - f),
                             do * o * (1.0 - o),
                             dc * i * (1.0 - g * g)], axis=1)
        da_all[:, t] = da
        dwh += h_prev.T @ da
        dh_next = da @ wh.T
        dc_next = dc * f
    dwx = np.einsum("btd,btk->dk", x, da_all)
    db = da_all.sum(axis=(0, 1))
    dx = da_all @ wx.T
    return dwx, dwh, db, dx


def bilstm_forward(params: dict, x: np.ndarray, lengths: np.ndarray,
                   dropout: float = 0.0, rng: np.random.Generator | None = None):
    """Encode padded input (B, T, d); sequences with length 0 encode to zeros."""
    B, T, _ = x.shape
    rev = _reverse_index(lengths, T)
    rows = np.arange(B)[:, None]
    x_rev = x[rows, rev]
    hf, steps_f = _run(params["lstm_f_Wx"], params["lstm_f_Wh"], params["lstm_f_b"], x)
    hb_rev, steps_b = _run(params["lstm_b_Wx"], params["lstm_b_Wh"], params["lstm_b_b"], x_rev)
    hb = hb_rev[rows, rev]
    states = np.concatenate([hf, hb], axis=2)
    n_valid = np.maximum(lengths, 1)
    pooled, arg = _kernels.max_over_time(states, n_valid)
    empty = lengths == 0
    pooled[empty] = 0.0
    mask = None
    if rng is not None and dropout > 0:
        mask = dropout_mask(rng, pooled.shape, dropout)
        pooled = pooled * mask
    cache = (x, x_rev, rev, steps_f, steps_b, arg, empty, mask)
    return pooled, cache


def bilstm_backward(params: dict, cache, upstream: np.ndarray):
    x, x_rev, rev, steps_f, steps_b, arg, empty, mask = cache
    B, T, _ = x.shape
    hidden = params["lstm_f_Wh"].shape[0]
    if mask is not None:
        upstream = upstream * mask
    upstream = upstream.copy()
    upstream[empty] = 0.0
    dstates = _kernels.scatter_max_grad(np.ascontiguousarray(upstream), arg, T)
    rows = np.arange(B)[:, None]
    dhf = dstates[:, :, :hidden]
    dhb_rev = np.zeros_like(dhf)
    dhb_rev[rows, rev] = dstates[:, :, hidden:]
    grads = {}
    wx, wh, b, dxf = _run_backward(params["lstm_f_Wx"], params["lstm_f_Wh"], x, steps_f, dhf)
    grads["lstm_f_Wx"], grads["lstm_f_Wh"], grads["lstm_f_b"] = wx, wh, b
    wx, wh, b, dxb_rev = _run_backward(params["lstm_b_Wx"], params["lstm_b_Wh"], x_rev, steps_b, dhb_rev)
    grads["lstm_b_Wx"], grads["lstm_b_Wh"], grads["lstm_b_b"] = wx, wh, b
    dx = dxf.copy()
    np.add.at(dx, (np.broadcast_to(rows, rev.shape), rev), dxb_rev)
    return grads, dx
