"""Tiling and pass ordering of the row-streaming dataflow.

Loop nest, outermost first: filter group, output-row tile, input channel,
filter row, output row within the tile. One pass streams one input row
through the CUs; passes whose input row lies in the zero border are dropped.
"""
from dataclasses import dataclass
from typing import NamedTuple

from .errors import (FilterWidthMismatch, RowTooWide, UnsupportedPadding,
                     UnsupportedStride)


@dataclass(frozen=True)
class Tiling:
    g: int   # filter groups
    r: int   # output rows per tile
    t: int   # tiles per group
    u: int
    n: int
    m: int
    ol: int

    def filters_in_group(self, group):
        return min(self.u, self.m - group * self.u)

    def tile_rows(self, tile):
        """Global output rows held by ``tile``."""
        return range(tile * self.r, min((tile + 1) * self.r, self.ol))

    def tile_words(self, tile):
        return len(self.tile_rows(tile)) * self.ol


def derive_tiling(arch, layer):
    r = arch.sram_depth // layer.ol
    if r < 1:
        raise RowTooWide(f"output row of {layer.ol} words exceeds SRAM depth {arch.sram_depth}")
    g = -(-layer.m // arch.u)
    t = -(-layer.ol // r)
    return Tiling(g=g, r=r, t=t, u=arch.u, n=arch.n, m=layer.m, ol=layer.ol)


def check_dataflow(arch, layer):
    """Raise if the layer cannot be mapped onto the serial CU chain."""
    if layer.s != 1:
        raise UnsupportedStride(f"stride {layer.s} not supported (only s=1)")
    if layer.fl != arch.n or layer.fh != arch.n:
        raise FilterWidthMismatch(
            f"{layer.fh}x{layer.fl} filter on a CU with n={arch.n} multipliers")
    # the right-border write of a pass must fit into the next pass's idle first cycle
    if layer.z > 1 or 2 * layer.z > arch.n - 1:
        raise UnsupportedPadding(f"z={layer.z} not supported with n={arch.n}")


class PassDescriptor(NamedTuple):
    group: int
    tile: int
    channel: int
    filter_row: int
    row: int       # output row inside the tile
    out_row: int   # global output row
    in_row: int    # input row streamed during the pass


def valid_filter_rows(out_row, layer):
    """Filter rows whose input row is inside the image for ``out_row``."""
    base = out_row * layer.s - layer.z
    return tuple(j for j in range(layer.fh) if 0 <= base + j < layer.il)


def iter_passes(tiling, layer, groups=None):
    """Yield passes in execution order (optionally only for some groups)."""
    groups = range(tiling.g) if groups is None else groups
    valid = [valid_filter_rows(rr, layer) for rr in range(layer.ol)]
    for grp in groups:
        for tile in range(tiling.t):
            rows = tiling.tile_rows(tile)
            for c in range(layer.ic):
                for j in range(layer.fh):
                    for rr in rows:
                        if j in valid[rr]:
                            yield PassDescriptor(grp, tile, c, j, rr - rows.start, rr,
                                                 rr * layer.s + j - layer.z)


def pass_sequence(tiling, layer):
    if layer.s != 1:
        raise UnsupportedStride(f"stride {layer.s} not supported (only s=1)")
    if layer.fl != tiling.n or layer.fh != tiling.n:
        raise FilterWidthMismatch(
            f"{layer.fh}x{layer.fl} filter on a CU with n={tiling.n} multipliers")
    return list(iter_passes(tiling, layer))


def passes_per_group(layer):
    """Number of passes one filter group issues across all tiles."""
    return layer.ic * sum(len(valid_filter_rows(rr, layer)) for rr in range(layer.ol))


def weight_loads_per_group(tiling, layer):
    """Distinct (tile, channel, filter row) combinations that issue a pass."""
    total = 0
    for tile in range(tiling.t):
        js = set()
        for rr in tiling.tile_rows(tile):
            js.update(valid_filter_rows(rr, layer))
        total += len(js)
    return total * layer.ic


def retained_products_per_pass(layer, n):
    """Multiplier outputs that reach a stored partial sum in one pass.

    Products whose input column falls in the zero border are discarded by the
    border multiplexers.
    """
    total = 0
    for o in range(layer.ol):
        total += sum(1 for i in range(n) if 0 <= o - layer.z + i < layer.il)
    return total
