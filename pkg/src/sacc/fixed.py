"""Two's-complement fixed-point helpers shared by the oracle and the engine.

Products wrap to ``2 * data_bits``, partial sums wrap to ``sram_word_bits``,
and only the final requantization saturates.
"""
from dataclasses import dataclass

import numpy as np


def wrap(value, bits):
    """Reduce ``value`` (int or int64 array) to a signed ``bits``-wide integer."""
    half = 1 << (bits - 1)
    if isinstance(value, np.ndarray):
        if value.dtype.itemsize * 8 == bits:
            return value  # native two's-complement overflow is already the wrap
        return ((value + half) & ((1 << bits) - 1)) - half
    return ((int(value) + half) & ((1 << bits) - 1)) - half


def saturate(value, bits):
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    if isinstance(value, np.ndarray):
        return np.clip(value, lo, hi)
    return max(lo, min(hi, int(value)))


@dataclass(frozen=True)
class FixedPointRules:
    data_bits: int = 16
    acc_bits: int = 32
    out_shift: int = 0

    @property
    def dtype(self):
        """Narrowest numpy type holding products and partial sums exactly."""
        return np.int32 if self.acc_bits <= 32 and self.product_bits <= 32 else np.int64

    @property
    def product_bits(self):
        return 2 * self.data_bits

    def product(self, x, w):
        return wrap(x * w, self.product_bits)

    def accumulate(self, acc, term):
        return wrap(acc + term, self.acc_bits)

    def requantize(self, acc):
        """Floor-shift by ``out_shift`` then saturate to ``data_bits``."""
        if isinstance(acc, np.ndarray):
            return saturate(acc.astype(np.int64) >> self.out_shift, self.data_bits)
        return saturate(int(acc) >> self.out_shift, self.data_bits)


def requantize(acc, rules):
    return rules.requantize(acc)
