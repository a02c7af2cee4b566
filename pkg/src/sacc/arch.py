"""Layer geometry, accelerator parameters and network presets."""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (ChannelMismatch, NonIntegerOutput, NonPositive,
                     ShiftOutOfRange)
from .fixed import FixedPointRules


@dataclass(frozen=True)
class LayerShape:
    """Geometry of one square convolutional layer.

    ``ol`` and ``oc`` are derived; construction fails when the output side
    length is not an exact integer.
    """
    il: int
    ic: int
    fl: int
    fh: int
    z: int
    s: int
    m: int
    name: str = ""
    ol: int = field(init=False)
    oc: int = field(init=False)

    def __post_init__(self):
        for key, lo in (("il", 1), ("ic", 1), ("fl", 1), ("fh", 1), ("s", 1), ("m", 1), ("z", 0)):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool):
                raise NonPositive(f"{key} must be an integer, got {v!r}")
            if v < lo:
                raise NonPositive(f"{key}={v} is below its minimum {lo}")
        span = self.il - self.fl + 2 * self.z
        if span < 0:
            raise NonPositive(f"filter ({self.fl}) wider than padded input ({self.il}+2*{self.z})")
        if self.il - self.fh + 2 * self.z < 0:
            raise NonPositive(f"filter height ({self.fh}) exceeds padded input")
        if span % self.s:
            raise NonIntegerOutput(
                f"(il - fl + 2z) = {span} is not divisible by stride {self.s}")
        object.__setattr__(self, "ol", span // self.s + 1)
        object.__setattr__(self, "oc", self.m)

    @property
    def fc(self):
        return self.ic

    @property
    def weight_count(self):
        return self.m * self.ic * self.fh * self.fl


def validate_layer(il, ic, fl, fh=None, z=0, s=1, m=1, name=""):
    """Build a :class:`LayerShape`; ``fh`` defaults to ``fl`` (square filters)."""
    return LayerShape(il=il, ic=ic, fl=fl, fh=fl if fh is None else fh,
                      z=z, s=s, m=m, name=name)


@dataclass(frozen=True)
class ArchConfig:
    u: int = 64
    n: int = 3
    sram_depth: int = 448
    sram_word_bits: int = 32
    data_bits: int = 16
    clock_hz: float = 200e6
    # Fractional values model a drain port slower than one word per cycle.
    drain_words_per_cycle: float = 1
    out_shift: int = 8

    def __post_init__(self):
        for key in ("u", "n", "sram_depth"):
            v = getattr(self, key)
            if not isinstance(v, int) or v < 1:
                raise NonPositive(f"{key}={v!r} must be a positive integer")
        if self.data_bits not in (8, 16):
            raise NonPositive(f"data_bits={self.data_bits!r} must be 8 or 16")
        if not isinstance(self.sram_word_bits, int) or not (
                self.data_bits <= self.sram_word_bits <= 62):
            raise NonPositive(
                f"sram_word_bits={self.sram_word_bits!r} must lie in [data_bits, 62]")
        if not self.clock_hz > 0:
            raise NonPositive(f"clock_hz={self.clock_hz!r} must be positive")
        if not self.drain_words_per_cycle > 0:
            raise NonPositive(
                f"drain_words_per_cycle={self.drain_words_per_cycle!r} must be positive")
        if not isinstance(self.out_shift, int) or not 0 <= self.out_shift < self.sram_word_bits:
            raise ShiftOutOfRange(
                f"out_shift={self.out_shift!r} outside [0, {self.sram_word_bits})")

    @property
    def rules(self):
        return FixedPointRules(self.data_bits, self.sram_word_bits, self.out_shift)

    @property
    def bytes_per_word(self):
        return self.data_bits // 8

    @property
    def pe_count(self):
        return self.u * self.n

    def matches_published(self):
        """True when every parameter the published design fixes is at its default."""
        ref = ArchConfig()
        keys = ("u", "n", "sram_depth", "sram_word_bits", "data_bits", "clock_hz")
        return all(getattr(self, k) == getattr(ref, k) for k in keys)


def validate_arch(**params):
    return ArchConfig(**params)


class HostOp(str, Enum):
    NONE = "none"
    RELU = "relu"
    RELU_POOL = "relu+maxpool2x2"

    def out_side(self, side):
        return side // 2 if self is HostOp.RELU_POOL else side


@dataclass(frozen=True)
class LayerEntry:
    shape: LayerShape
    host_op: HostOp = HostOp.RELU

    @property
    def name(self):
        return self.shape.name


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple = ()
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for k in range(1, len(self.layers)):
            prev, cur = self.layers[k - 1], self.layers[k]
            if cur.shape.ic != prev.shape.oc:
                raise ChannelMismatch(
                    f"layer {k} expects ic={cur.shape.ic}, previous layer gives {prev.shape.oc}")
            side = prev.host_op.out_side(prev.shape.ol)
            if cur.shape.il != side:
                raise ChannelMismatch(
                    f"layer {k} expects il={cur.shape.il}, previous layer gives {side}")

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    @property
    def shapes(self):
        return [e.shape for e in self.layers]

    def select(self, indices):
        """Sub-network of the given 0-based layer indices (chaining not rechecked)."""
        net = object.__new__(NetworkSpec)
        object.__setattr__(net, "layers", tuple(self.layers[i] for i in indices))
        object.__setattr__(net, "name", self.name)
        return net


_VGG16_PLAN = [
    # (name, ic, m, pool_after)
    ("conv1_1", 3, 64, False), ("conv1_2", 64, 64, True),
    ("conv2_1", 64, 128, False), ("conv2_2", 128, 128, True),
    ("conv3_1", 128, 256, False), ("conv3_2", 256, 256, False), ("conv3_3", 256, 256, True),
    ("conv4_1", 256, 512, False), ("conv4_2", 512, 512, False), ("conv4_3", 512, 512, True),
    ("conv5_1", 512, 512, False), ("conv5_2", 512, 512, False), ("conv5_3", 512, 512, True),
]


def vgg16_conv_preset():
    """The 13 convolutional layers of VGG-16 on a 224x224 RGB input."""
    side = 224
    entries = []
    for name, ic, m, pool in _VGG16_PLAN:
        shape = LayerShape(il=side, ic=ic, fl=3, fh=3, z=1, s=1, m=m, name=name)
        op = HostOp.RELU_POOL if pool else HostOp.RELU
        entries.append(LayerEntry(shape, op))
        side = op.out_side(shape.ol)
    return NetworkSpec(entries, name="vgg16")

