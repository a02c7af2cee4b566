"""Direct fixed-point convolution used as the bit-exact reference.

Tensors are numpy integer arrays laid out channel-major, ``(channels, rows,
cols)``. Filters are ``(m, ic, fh, fl)`` weights plus ``m`` accumulator-width
biases.
"""
from dataclasses import dataclass

import numpy as np

from .errors import OddDimension, ShapeMismatch
from .arch import HostOp
from .fixed import wrap


@dataclass(frozen=True)
class FilterSet:
    weights: np.ndarray  # (m, ic, fh, fl)
    biases: np.ndarray   # (m,)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.int64)
        b = np.asarray(self.biases, dtype=np.int64)
        if w.ndim != 4:
            raise ShapeMismatch(f"weights must be 4-D (m, ic, fh, fl), got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ShapeMismatch(f"expected {w.shape[0]} biases, got shape {b.shape}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def m(self):
        return self.weights.shape[0]

    def group(self, start, stop):
        return FilterSet(self.weights[start:stop], self.biases[start:stop])


def check_tensor(t, bits=16):
    t = np.asarray(t)
    if t.ndim != 3:
        raise ShapeMismatch(f"tensor must be 3-D (channels, rows, cols), got shape {t.shape}")
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    if t.size and (t.min() < lo or t.max() > hi):
        raise ShapeMismatch(f"tensor values exceed signed {bits}-bit range")
    return t.astype(np.int64)


def check_operands(layer, x, filters, rules):
    x = check_tensor(x, rules.data_bits)
    if x.shape != (layer.ic, layer.il, layer.il):
        raise ShapeMismatch(
            f"input shape {x.shape} does not match layer ({layer.ic}, {layer.il}, {layer.il})")
    if filters.weights.shape != (layer.m, layer.ic, layer.fh, layer.fl):
        raise ShapeMismatch(
            f"weights shape {filters.weights.shape} does not match layer "
            f"({layer.m}, {layer.ic}, {layer.fh}, {layer.fl})")
    lim = 1 << (rules.data_bits - 1)
    if filters.weights.size and (filters.weights.min() < -lim or filters.weights.max() >= lim):
        raise ShapeMismatch(f"weights exceed signed {rules.data_bits}-bit range")
    return x


def golden_conv(layer, x, filters, rules):
    """Evaluate the convolution sum term by term.

    The loops run over input channel, filter row and filter column; each term
    is added for all output positions and filters at once. Reads outside the
    input are zero (index guards, no padded copy is made).
    """
    x = check_operands(layer, x, filters, rules).astype(rules.dtype)
    weights = filters.weights.astype(rules.dtype)
    ol, s, z, il = layer.ol, layer.s, layer.z, layer.il
    acc = np.broadcast_to(wrap(filters.biases, rules.acc_bits).astype(rules.dtype)[:, None, None],
                          (layer.m, ol, ol)).copy()
    for c in range(layer.ic):
        for j in range(layer.fh):
            r0, r1 = _valid_span(ol, s, j - z, il)
            if r0 >= r1:
                continue
            in_rows = slice(r0 * s + j - z, (r1 - 1) * s + j - z + 1, s)
            for i in range(layer.fl):
                q0, q1 = _valid_span(ol, s, i - z, il)
                if q0 >= q1:
                    continue
                in_cols = slice(q0 * s + i - z, (q1 - 1) * s + i - z + 1, s)
                w = weights[:, c, j, i]
                prod = wrap(w[:, None, None] * x[c, in_rows, in_cols][None], rules.product_bits)
                acc[:, r0:r1, q0:q1] = wrap(acc[:, r0:r1, q0:q1] + prod, rules.acc_bits)
    return rules.requantize(acc).astype(np.int16)


def _valid_span(ol, s, offset, il):
    """Output indices ``o`` in ``[lo, hi)`` with ``0 <= o*s + offset < il``."""
    lo = 0
    while lo < ol and lo * s + offset < 0:
        lo += 1
    hi = ol
    while hi > lo and (hi - 1) * s + offset >= il:
        hi -= 1
    return lo, hi


def host_relu(t):
    return np.maximum(np.asarray(t), 0).astype(np.asarray(t).dtype)


def host_maxpool2x2(t):
    t = np.asarray(t)
    c, h, w = t.shape
    if h % 2 or w % 2:
        raise OddDimension(f"maxpool2x2 needs even rows and cols, got {h}x{w}")
    return t.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def apply_host_op(t, op):
    op = HostOp(op)
    if op is HostOp.NONE:
        return t
    t = host_relu(t)
    if op is HostOp.RELU_POOL:
        t = host_maxpool2x2(t)
    return t

