"""Minimal reverse-mode automatic differentiation over numpy arrays.

A fresh graph is built per forward call; there is no global tape. All values
are float64. Ops are restricted to what the description encoders need, which
keeps every backward rule small enough to verify by finite differences.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from .errors import NumericError

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_LN_EPS = 1e-5


class Tensor:
    """Graph node holding a value, an accumulated gradient and backward edges."""

    __slots__ = ("data", "grad", "_parents", "_vjps", "needs_grad")

    def __init__(self, data, parents=(), vjps=(), needs_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._vjps = vjps
        self.needs_grad = needs_grad or any(p.needs_grad for p in parents)


def leaf(data, needs_grad=False):
    return Tensor(data, needs_grad=needs_grad)


def _make(data, pairs):
    parents = tuple(p for p, _ in pairs)
    vjps = tuple(v for _, v in pairs)
    return Tensor(data, parents, vjps)


def _unbroadcast(grad, shape):
    # Sum gradient over axes that numpy broadcasting expanded.
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _topo(node, visited, order):
    visited.add(id(node))
    for p in node._parents:
        if p.needs_grad and id(p) not in visited:
            _topo(p, visited, order)
    order.append(node)


def backward(out, seed):
    """Accumulate d(seed . out)/d(leaf) into every reachable leaf's .grad."""
    seed = np.asarray(seed, dtype=np.float64)
    if seed.shape != out.data.shape:
        seed = seed.reshape(out.data.shape)
    order: list[Tensor] = []
    _topo(out, set(), order)
    out.grad = seed.copy()
    for node in reversed(order):
        g = node.grad
        if g is None:
            continue
        for parent, vjp in zip(node._parents, node._vjps):
            if not parent.needs_grad:
                continue
            piece = vjp(g)
            parent.grad = piece if parent.grad is None else parent.grad + piece


def assert_finite(t: Tensor, where: str):
    if not np.isfinite(t.data).all():
        raise NumericError(f"non-finite value in {where}")


# ---------------------------------------------------------------------------
# ops


def add(a, b):
    return _make(a.data + b.data, [
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(g, b.data.shape)),
    ])


def mul(a, b):
    da, db = a.data, b.data
    return _make(da * db, [
        (a, lambda g: _unbroadcast(g * db, da.shape)),
        (b, lambda g: _unbroadcast(g * da, db.shape)),
    ])


def scale(a, c: float):
    return _make(a.data * c, [(a, lambda g: g * c)])


def add_const(a, c):
    c = np.asarray(c, dtype=np.float64)
    return _make(a.data + c, [(a, lambda g: _unbroadcast(g, a.data.shape))])


def matmul(a, b):
    da, db = a.data, b.data
    return _make(da @ db, [
        (a, lambda g: g @ db.T),
        (b, lambda g: da.T @ g),
    ])


def transpose(a):
    return _make(a.data.T, [(a, lambda g: g.T)])


def tanh(a):
    y = np.tanh(a.data)
    return _make(y, [(a, lambda g: g * (1.0 - y * y))])


def gelu(a):
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
    return _make(x * cdf, [(a, lambda g: g * (cdf + x * pdf))])


def softmax_rows(a):
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return y * (g - (g * y).sum(axis=-1, keepdims=True))

    return _make(y, [(a, vjp)])


def layer_norm(x, gain, bias, eps=_LN_EPS):
    """Normalize each row of ``x`` over the last axis, then scale and shift."""
    d = x.data
    mu = d.mean(axis=-1, keepdims=True)
    centered = d - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    gd = gain.data

    def vjp_x(g):
        gx = g * gd
        return inv * (
            gx
            - gx.mean(axis=-1, keepdims=True)
            - xhat * (gx * xhat).mean(axis=-1, keepdims=True)
        )

    return _make(xhat * gd + bias.data, [
        (x, vjp_x),
        (gain, lambda g: (g * xhat).sum(axis=0)),
        (bias, lambda g: g.sum(axis=0)),
    ])


def lookup_rows(table, idx):
    idx = np.asarray(idx, dtype=np.int64)
    shape = table.data.shape

    def vjp(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return out

    return _make(table.data[idx], [(table, vjp)])


def rows(a, start, stop):
    n = a.data.shape[0]

    def vjp(g):
        out = np.zeros_like(a.data)
        out[start:stop] = g
        return out

    del n
    return _make(a.data[start:stop], [(a, vjp)])


def cols(a, start, stop):
    def vjp(g):
        out = np.zeros_like(a.data)
        out[:, start:stop] = g
        return out

    return _make(a.data[:, start:stop], [(a, vjp)])


def concat_cols(parts):
    widths = [p.data.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)
    pairs = []
    for p, s, e in zip(parts, offsets[:-1], offsets[1:]):
        pairs.append((p, lambda g, s=s, e=e: g[:, s:e]))
    return _make(np.concatenate([p.data for p in parts], axis=1), pairs)


def concat_rows(parts):
    heights = [p.data.shape[0] for p in parts]
    offsets = np.cumsum([0] + heights)
    pairs = []
    for p, s, e in zip(parts, offsets[:-1], offsets[1:]):
        pairs.append((p, lambda g, s=s, e=e: g[s:e]))
    return _make(np.concatenate([p.data for p in parts], axis=0), pairs)


def mean_rows(a):
    n = a.data.shape[0]

    def vjp(g):
        return np.repeat(g / n, n, axis=0)

    return _make(a.data.mean(axis=0, keepdims=True), [(a, vjp)])


def maxpool_rows(a, window):
    """Column-wise max over non-overlapping groups of ``window`` rows."""
    d = a.data
    n, w = d.shape
    starts = list(range(0, n, window))
    out = np.empty((len(starts), w))
    argmax = np.empty((len(starts), w), dtype=np.int64)
    for i, s in enumerate(starts):
        block = d[s:s + window]
        local = block.argmax(axis=0)
        argmax[i] = local + s
        out[i] = block[local, np.arange(w)]

    def vjp(g):
        z = np.zeros_like(d)
        colspan = np.arange(w)
        for i in range(len(starts)):
            np.add.at(z, (argmax[i], colspan), g[i])
        return z

    return _make(out, [(a, vjp)])
