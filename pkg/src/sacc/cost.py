"""Closed-form cycles, DRAM traffic and throughput per layer and network."""
from dataclasses import dataclass, field, replace

from .errors import EmptyRange, LayerError, SaccError
from .schedule import (check_dataflow, derive_tiling, passes_per_group,
                       retained_products_per_pass, weight_loads_per_group)

MIB = 1 << 20


@dataclass(frozen=True)
class TrafficBreakdown:
    weights_read: int = 0
    inputs_read: int = 0
    outputs_written: int = 0

    @property
    def total(self):
        return self.weights_read + self.inputs_read + self.outputs_written

    def __add__(self, other):
        return TrafficBreakdown(self.weights_read + other.weights_read,
                                self.inputs_read + other.inputs_read,
                                self.outputs_written + other.outputs_written)


@dataclass(frozen=True)
class LayerCost:
    """Cost of one layer (or a sum of layers). Rates derive from ``cycles``."""
    name: str
    cycles: int
    traffic: TrafficBreakdown
    nominal_macs: int
    retained_products: int
    clock_hz: float
    pe_count: int
    tiling: object = None

    @property
    def seconds(self):
        return self.cycles / self.clock_hz

    @property
    def latency_ms(self):
        return self.seconds * 1e3

    @property
    def gops(self):
        return 2 * self.nominal_macs / self.seconds / 1e9 if self.cycles else 0.0

    @property
    def utilization(self):
        return self.retained_products / (self.pe_count * self.cycles) if self.cycles else 0.0

    @property
    def total_bytes(self):
        return self.traffic.total


@dataclass(frozen=True)
class CostReport:
    arch: object
    layers: tuple = ()
    network: str = ""

    @property
    def total(self):
        return LayerCost(
            name="total",
            cycles=sum(l.cycles for l in self.layers),
            traffic=sum((l.traffic for l in self.layers), TrafficBreakdown()),
            nominal_macs=sum(l.nominal_macs for l in self.layers),
            retained_products=sum(l.retained_products for l in self.layers),
            clock_hz=self.arch.clock_hz,
            pe_count=self.arch.pe_count,
        )

    @property
    def dram_mib(self):
        return self.total.total_bytes / MIB

    @property
    def dram_mb(self):
        return self.total.total_bytes / 1e6


def analytic_cycles(layer, arch):
    check_dataflow(arch, layer)
    tiling = derive_tiling(arch, layer)
    return tiling.g * layer.il * passes_per_group(layer)


def analytic_traffic(layer, arch):
    """Weights are fetched once per (tile, channel, filter row) that issues a
    pass, inputs once per streaming cycle, outputs once."""
    check_dataflow(arch, layer)
    tiling = derive_tiling(arch, layer)
    bpw = arch.bytes_per_word
    loads = weight_loads_per_group(tiling, layer)
    weights = sum(tiling.filters_in_group(g) for g in range(tiling.g)) * loads * arch.n * bpw
    inputs = analytic_cycles(layer, arch) * bpw
    outputs = layer.ol * layer.ol * layer.oc * bpw
    return TrafficBreakdown(weights, inputs, outputs)


def nominal_macs(layer):
    """MACs counting padded positions, the usual convention for op counts."""
    return layer.ol * layer.ol * layer.m * layer.fl * layer.fh * layer.ic


def layer_cost(layer, arch):
    tiling = derive_tiling(arch, layer)
    per_pass = retained_products_per_pass(layer, arch.n)
    return LayerCost(
        name=layer.name,
        cycles=analytic_cycles(layer, arch),
        traffic=analytic_traffic(layer, arch),
        nominal_macs=nominal_macs(layer),
        retained_products=per_pass * layer.m * passes_per_group(layer),
        clock_hz=arch.clock_hz,
        pe_count=arch.pe_count,
        tiling=tiling,
    )


def network_cost(net, arch):
    rows = []
    for k, entry in enumerate(net.layers):
        try:
            rows.append(layer_cost(entry.shape, arch))
        except SaccError as e:
            raise LayerError(k, entry.shape.name, e) from e
    return CostReport(arch, tuple(rows), net.name or "")


@dataclass(frozen=True)
class SweepPoint:
    sram_depth: int
    u: int
    n: int
    cycles: int = 0
    weights_bytes: int = 0
    total_bytes: int = 0
    error: str = ""
    report: CostReport = field(default=None, compare=False, repr=False)


def sweep(net, base, sram_depths=None, us=None, ns=None):
    """Evaluate ``net`` over the cartesian product of the given ranges.

    Invalid points are recorded with their error message rather than raised.
    """
    sram_depths = [base.sram_depth] if sram_depths is None else list(sram_depths)
    us = [base.u] if us is None else list(us)
    ns = [base.n] if ns is None else list(ns)
    if not sram_depths or not us or not ns:
        raise EmptyRange("every sweep range needs at least one value")
    points = []
    for depth in sram_depths:
        for u in us:
            for n in ns:
                try:
                    arch = replace(base, sram_depth=depth, u=u, n=n)
                    rep = network_cost(net, arch)
                except SaccError as e:
                    points.append(SweepPoint(depth, u, n, error=str(e)))
                    continue
                tot = rep.total
                points.append(SweepPoint(depth, u, n, tot.cycles, tot.traffic.weights_read,
                                         tot.total_bytes, report=rep))
    return points
