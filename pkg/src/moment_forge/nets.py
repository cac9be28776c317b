"""Small feed-forward nets with leaky-ReLU hiddens, manual backprop, flat parameter vectors."""
from __future__ import annotations

import numpy as np


def layer_shapes(widths: tuple[int, ...]) -> list[tuple[tuple[int, int], int]]:
    """[(W shape, b length), ...] for consecutive layer pairs."""
    if len(widths) < 2:
        raise ValueError("widths must list at least input and output sizes")
    return [((widths[i], widths[i + 1]), widths[i + 1]) for i in range(len(widths) - 1)]


def n_params(widths: tuple[int, ...]) -> int:
    return sum(sh[0] * sh[1] + blen for sh, blen in layer_shapes(widths))


def init_params(widths: tuple[int, ...], seed: int) -> np.ndarray:
    """Uniform [-s, s] init with s = 1/sqrt(fan_in) per layer; biases zero."""
    rng = np.random.default_rng(seed)
    parts = []
    for (win, wout), blen in layer_shapes(widths):
        s = 1.0 / np.sqrt(win)
        parts.append(rng.uniform(-s, s, size=win * wout))
        parts.append(np.zeros(blen))
    return np.concatenate(parts)


def unpack(widths: tuple[int, ...], flat: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    flat = np.asarray(flat, dtype=float)
    if flat.size != n_params(widths):
        raise ValueError(f"expected {n_params(widths)} parameters for widths {widths}, got {flat.size}")
    layers, pos = [], 0
    for (win, wout), blen in layer_shapes(widths):
        w = flat[pos : pos + win * wout].reshape(win, wout)
        pos += win * wout
        b = flat[pos : pos + blen]
        pos += blen
        layers.append((w, b))
    return layers


def weight_mask(widths: tuple[int, ...]) -> np.ndarray:
    """Boolean flat mask selecting weight-matrix entries (True) vs biases (False)."""
    parts = []
    for (win, wout), blen in layer_shapes(widths):
        parts.append(np.ones(win * wout, dtype=bool))
        parts.append(np.zeros(blen, dtype=bool))
    return np.concatenate(parts)


def _lrelu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def _lrelu_d(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, 1.0, slope)


def forward(widths, slope: float, flat: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Batched forward pass; hidden layers leaky-ReLU, output layer linear."""
    out, _ = _forward_cached(widths, slope, flat, inputs)
    return out


def _forward_cached(widths, slope, flat, inputs):
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != widths[0]:
        raise ValueError(f"input dim {x.shape[1]} != network input width {widths[0]}")
    layers = unpack(widths, flat)
    acts, pre = [x], []
    a = x
    for i, (w, b) in enumerate(layers):
        z = a @ w + b
        pre.append(z)
        a = _lrelu(z, slope) if i < len(layers) - 1 else z
        acts.append(a)
    return a, (layers, acts, pre)


def backprop_params(widths, slope, flat, inputs, cotangent: np.ndarray) -> np.ndarray:
    """Flat gradient of sum_n cotangent[n]^T output[n] w.r.t. parameters."""
    _, (layers, acts, pre) = _forward_cached(widths, slope, flat, inputs)
    g = np.asarray(cotangent, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    grads = [None] * len(layers)
    delta = g  # output layer is linear
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ w.T) * _lrelu_d(pre[i - 1], slope)
    return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])


def per_sample_param_jac(widths, slope, flat, inputs) -> np.ndarray:
    """Per-sample parameter Jacobian, shape (n, n_params, output_dim)."""
    out, (layers, acts, pre) = _forward_cached(widths, slope, flat, inputs)
    n, m = out.shape
    cols = []
    for k in range(m):
        delta = np.zeros((n, m))
        delta[:, k] = 1.0
        parts = [None] * len(layers)
        d = delta
        for i in range(len(layers) - 1, -1, -1):
            w, _ = layers[i]
            # per-sample grad of W is outer(a_{i}, delta), of b is delta
            gw = np.einsum("ni,nj->nij", acts[i], d).reshape(n, -1)
            parts[i] = np.concatenate([gw, d], axis=1)
            if i > 0:
                d = (d @ w.T) * _lrelu_d(pre[i - 1], slope)
        cols.append(np.concatenate(parts, axis=1))
    return np.stack(cols, axis=2)
