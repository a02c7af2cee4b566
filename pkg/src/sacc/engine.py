"""Cycle-accurate model of the serial-accumulation convolution engine.

U convolution units (CUs) share one broadcast input feature per cycle. Each
CU holds N weight registers, N multipliers and a chain of N-1 accumulator
registers; the last PE writes its partial sum straight into SRAM, and the
accumulation multiplexer F0 folds in either the bias (first write to an
address in a tile) or the stored partial sum. Each CU owns two SRAM banks
used ping-pong: one is drained to DRAM while the other accumulates.

Two execution modes produce identical state:

``mode="cycle"``
    :meth:`ConvEngine.step` advances one clock cycle at a time.
``mode="pass"``
    the same register recurrence is evaluated for a whole input row at once.

Timing (stalls, drains, DRAM trace) does not depend on data, which lets
filter groups run on separate engine instances and merge bit-identically.
"""
import copy
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, NamedTuple, Optional

import numpy as np

from .errors import LoggingDisabled, PingPongViolation
from .fixed import wrap
from .golden import FilterSet, check_operands
from .schedule import check_dataflow, derive_tiling, iter_passes


class TraceRecord(NamedTuple):
    cycle: int
    layer: str
    category: str  # "W", "I" or "O"
    words: int


@dataclass
class DramTrace:
    """Per-layer DRAM byte counters plus an optional transaction log."""
    layer: str = ""
    weights_read: int = 0
    inputs_read: int = 0
    outputs_written: int = 0
    log: Optional[List[TraceRecord]] = None

    @property
    def total(self):
        return self.weights_read + self.inputs_read + self.outputs_written

    @property
    def logging(self):
        return self.log is not None

    def records(self):
        if self.log is None:
            raise LoggingDisabled(f"transaction logging was off for layer {self.layer!r}")
        return self.log

    def merge(self, other):
        self.weights_read += other.weights_read
        self.inputs_read += other.inputs_read
        self.outputs_written += other.outputs_written
        if self.log is not None and other.log is not None:
            self.log.extend(other.log)


@dataclass
class Timeline:
    """Clock, bank occupancy and drain-port state."""
    cycle: int = 0
    stall_cycles: int = 0
    tiles_started: int = 0
    busy_until: list = field(default_factory=lambda: [0, 0])
    drain_window: list = field(default_factory=lambda: [(0, 0), (0, 0)])
    port_free: int = 0

    def bank_for_next_tile(self):
        return self.tiles_started % 2

    def check_write(self, bank, first, last=None):
        """Raise if any cycle in ``[first, last]`` writes a bank under drain."""
        last = first if last is None else last
        start, end = self.drain_window[bank]
        if first < end and last >= start:
            raise PingPongViolation(
                f"bank {bank} written in cycles [{first}, {last}] while draining [{start}, {end})")


class CycleEvent(NamedTuple):
    cycle: int
    kind: str                 # "stream", "stall" or "flush"
    pass_: object = None      # PassDescriptor during stream cycles
    q: Optional[int] = None   # column streamed in this pass
    x: Optional[int] = None   # broadcast input feature
    acc: Optional[np.ndarray] = None    # (u, n-1) accumulators after the cycle
    write: Optional[tuple] = None       # (bank, address, (u,) stored words)


@dataclass
class LayerRun:
    output: np.ndarray
    cycles: int
    stall_cycles: int
    trace: DramTrace
    retained_products: int
    utilization: float
    drain_end: int


class ConvEngine:
    """One layer on the engine, optionally restricted to some filter groups.

    ``entry`` is a :class:`Timeline` to resume from (used when groups run on
    separate instances); ``final`` marks the instance that owns the terminal
    flush cycle.
    """

    def __init__(self, arch, layer, x=None, filters=None, *, groups=None, entry=None,
                 final=True, log=False, checked=False, dry=False):
        check_dataflow(arch, layer)
        self.arch, self.layer = arch, layer
        self.rules = arch.rules
        self.tiling = derive_tiling(arch, layer)
        self.groups = list(range(self.tiling.g)) if groups is None else list(groups)
        self.passes = list(iter_passes(self.tiling, layer, self.groups))
        self.final = final
        self.checked = checked
        self.dry = dry
        self.tl = copy.deepcopy(entry) if entry is not None else Timeline()
        self.trace = DramTrace(layer.name, log=[] if log else None)
        self.retained_products = 0
        self.entry_states = {}

        bw = Fraction(arch.drain_words_per_cycle).limit_denominator(10 ** 9)
        self._drain_num, self._drain_den = bw.numerator, bw.denominator
        u, n = arch.u, arch.n
        if not dry:
            if x is None or filters is None:
                raise ValueError("input and filters are required unless dry=True")
            dt = self.rules.dtype
            self.x = check_operands(layer, x, filters, self.rules).astype(dt)
            self.filters = FilterSet(filters.weights, wrap(filters.biases, self.rules.acc_bits))
            self._weights = filters.weights.astype(dt)
            self.wr = np.zeros((u, n), dtype=dt)
            self.acc = np.zeros((u, max(n - 1, 0)), dtype=dt)
            self.bias_reg = np.zeros(u, dtype=dt)
            self.sram = np.zeros((2, u, arch.sram_depth), dtype=dt)
            self.written = np.zeros((2, arch.sram_depth), dtype=bool)
            self.output = np.zeros((layer.m, layer.ol, layer.ol), dtype=np.int16)
        else:
            self.output = None
        self._acc_cnt = [0] * max(n - 1, 0)
        self._cursor = 0
        self._q = 0
        self._pass_open = False
        self._stall_left = 0
        self._pending = None        # deferred right-border write, see _defer()
        self._undrained = []        # tiles scheduled to drain once pending writes land
        self._bank = 0
        self._group = None
        self._real = 0
        self._weight_key = None
        self._done = False
        self._inpass_cnt, self._deferred_cnt = self._pass_product_counts()

    # ------------------------------------------------------------------
    # control shared by both modes

    def _pass_product_counts(self):
        """Retained products per pass, by running the count pipeline once."""
        n, z, il, ol = self.arch.n, self.layer.z, self.layer.il, self.layer.ol
        acc = [0] * (n - 1)
        inpass = 0
        for q in range(il):
            carry = acc if q > 0 else [0] * (n - 1)
            new = [1] + [carry[i - 1] + 1 for i in range(1, n - 1)]
            new = [v if q >= i - z else 0 for i, v in enumerate(new)]
            if 0 <= q - (n - 1) + z < ol:
                inpass += (carry[n - 2] if n > 1 else 0) + 1
            acc = new
        deferred = acc[n - 2] if (n > 1 and z) else 0
        return inpass, deferred

    def _open_pass(self, p):
        """Tile/group/weight bookkeeping at a pass boundary; returns stall cycles."""
        tl = self.tl
        stall = 0
        new_tile = (self._cursor == 0 or self.passes[self._cursor - 1][:2] != p[:2])
        if new_tile:
            self._bank = tl.bank_for_next_tile()
            tl.tiles_started += 1
            stall = max(0, tl.busy_until[self._bank] - tl.cycle)
            if p.group != self._group:
                self._group = p.group
                self._real = self.tiling.filters_in_group(p.group)
                if not self.dry:
                    k0 = p.group * self.arch.u
                    self.bias_reg[:] = 0
                    self.bias_reg[:self._real] = self.filters.biases[k0:k0 + self._real]
            if not self.dry:
                self.written[self._bank] = False
        start = tl.cycle + stall
        bpw = self.arch.bytes_per_word
        key = p[:4]
        if key != self._weight_key:
            self._weight_key = key
            words = self.arch.n * self._real
            self.trace.weights_read += words * bpw
            if self.trace.log is not None:
                self.trace.log.append(TraceRecord(start, self.layer.name, "W", words))
            if not self.dry:
                k0 = p.group * self.arch.u
                self.wr[:] = 0
                self.wr[:self._real] = self._weights[k0:k0 + self._real, p.channel,
                                                     p.filter_row, :]
        self.trace.inputs_read += self.layer.il * bpw
        if self.trace.log is not None:
            self.trace.log.append(TraceRecord(start, self.layer.name, "I", self.layer.il))
        return stall

    def _close_pass(self, p):
        """Advance the cursor; schedule the tile drain after its last pass."""
        self._cursor += 1
        self._q = 0
        self._pass_open = False
        nxt = self.passes[self._cursor] if self._cursor < len(self.passes) else None
        if nxt is not None and nxt[:2] == p[:2]:
            return
        tl = self.tl
        # a pending right-border write always lands in the very next cycle
        last_write = tl.cycle if self._pending is not None else tl.cycle - 1
        words = self.tiling.tile_words(p.tile)
        start = max(last_write + 1, tl.port_free)
        end = start + -(-words * self._drain_den // self._drain_num)
        tl.busy_until[self._bank] = end
        tl.drain_window[self._bank] = (start, end)
        tl.port_free = end
        total = words * self._real
        self.trace.outputs_written += total * self.arch.bytes_per_word
        if self.trace.log is not None:
            self.trace.log.append(TraceRecord(start, self.layer.name, "O", total))
        self._undrained.append((self._bank, p.group, p.tile, self._real))
        if self._pending is None:
            self._drain_data()

    def _drain_data(self):
        for bank, group, tile, real in self._undrained:
            if self.dry:
                continue
            rows = self.tiling.tile_rows(tile)
            words = len(rows) * self.layer.ol
            vals = self.rules.requantize(self.sram[bank, :real, :words])
            k0 = group * self.arch.u
            self.output[k0:k0 + real, rows.start:rows.stop, :] = \
                vals.reshape(real, len(rows), self.layer.ol)
        self._undrained = []

    def _write(self, bank, addr, partial, count, cycle, real=None, bias=None):
        if self.checked:
            self.tl.check_write(bank, cycle)
        self.retained_products += count * (self._real if real is None else real)
        if self.dry:
            return None
        bias = self.bias_reg if bias is None else bias
        f0 = self.sram[bank, :, addr] if self.written[bank, addr] else bias
        stored = wrap(partial + f0, self.rules.acc_bits)
        self.sram[bank, :, addr] = stored
        self.written[bank, addr] = True
        return bank, addr, stored

    def _flush_pending(self, cycle):
        """Right-border write: last accumulator plus a forced-zero product."""
        if self._pending is None:
            return None
        bank, addr, count, real, bias = self._pending
        self._pending = None
        partial = None if self.dry else self.acc[:, -1]
        ev = self._write(bank, addr, partial, count, cycle, real, bias)
        if self._undrained:
            self._drain_data()
        return ev

    def _defer(self, p):
        # the group's filter count and bias may change before this lands
        bias = None if self.dry else self.bias_reg.copy()
        self._pending = (self._bank, p.row * self.layer.ol + self.layer.ol - 1,
                         self._deferred_cnt, self._real, bias)

    # ------------------------------------------------------------------
    # cycle mode

    def step(self):
        """Advance one clock cycle; returns ``None`` once the layer is done."""
        if self.dry:
            raise ValueError("step() needs a data-carrying engine")
        tl = self.tl
        if self._done:
            return None
        if self._stall_left:
            return self._stall_cycle()
        if self._cursor < len(self.passes):
            p = self.passes[self._cursor]
            if not self._pass_open:
                self._pass_open = True
                self._stall_left = self._open_pass(p)
                if self._stall_left:
                    return self._stall_cycle()
            return self._stream_cycle(p)
        cycle = tl.cycle
        ev = self._flush_pending(cycle)
        self._done = True
        if self.final:
            tl.cycle += 1
            return CycleEvent(cycle, "flush", acc=self.acc.copy(), write=ev)
        return None

    def _stall_cycle(self):
        tl = self.tl
        cycle = tl.cycle
        ev = self._flush_pending(cycle)
        self._stall_left -= 1
        tl.stall_cycles += 1
        tl.cycle += 1
        return CycleEvent(cycle, "stall", acc=self.acc.copy(), write=ev)

    def _stream_cycle(self, p):
        tl, arch, layer, rules = self.tl, self.arch, self.layer, self.rules
        n, z, q = arch.n, layer.z, self._q
        cycle = tl.cycle
        x = int(self.x[p.channel, p.in_row, q])
        ev = None
        if q == 0:
            ev = self._flush_pending(cycle)
        prod = wrap(x * self.wr, rules.product_bits)
        carry = self.acc if q > 0 else np.zeros_like(self.acc)
        ccarry = self._acc_cnt if q > 0 else [0] * (n - 1)
        new = np.empty_like(self.acc)
        cnt = [0] * (n - 1)
        if n > 1:
            new[:, 0] = prod[:, 0]
            cnt[0] = 1
            for i in range(1, n - 1):
                new[:, i] = wrap(carry[:, i - 1] + prod[:, i], rules.acc_bits)
                cnt[i] = ccarry[i - 1] + 1
            for i in range(n - 1):
                # stage i only loads once its value can reach a valid column
                if q < i - z:
                    new[:, i] = 0
                    cnt[i] = 0
            partial = wrap(carry[:, n - 2] + prod[:, n - 1], rules.acc_bits)
            pcount = ccarry[n - 2] + 1
        else:
            partial, pcount = prod[:, 0], 1
        col = q - (n - 1) + z
        if 0 <= col < layer.ol:
            ev = self._write(self._bank, p.row * layer.ol + col, partial, pcount, cycle)
        self.acc, self._acc_cnt = new, cnt
        tl.cycle += 1
        self._q += 1
        if self._q == layer.il:
            if z and n > 1:
                self._defer(p)
            self._close_pass(p)
        return CycleEvent(cycle, "stream", p, q, x, self.acc.copy(), ev)

    # ------------------------------------------------------------------
    # pass mode

    def _stream_pass(self):
        tl, arch, layer, rules = self.tl, self.arch, self.layer, self.rules
        p = self.passes[self._cursor]
        stall = self._open_pass(p)
        if stall:
            self._flush_pending(tl.cycle)
            tl.cycle += stall
            tl.stall_cycles += stall
        c0 = tl.cycle
        self._flush_pending(c0)
        n, z, il, ol = arch.n, layer.z, layer.il, layer.ol
        # in-pass writes cover columns [lo, hi), streamed at q = col + n - 1 - z
        lo = max(0, z - (n - 1))
        hi = min(ol, il - (n - 1) + z)
        if self.checked and hi > lo:
            tl.check_write(self._bank, c0 + lo + n - 1 - z, c0 + hi - 1 + n - 1 - z)
        self.retained_products += self._inpass_cnt * self._real
        if not self.dry:
            ab = rules.acc_bits
            row = self.x[p.channel, p.in_row]
            prod = wrap(self.wr[:, :, None] * row[None, None, :], rules.product_bits)
            # stage i at column q = stage i-1 at q-1 plus this product; the
            # carry into q = 0 is the left-border zero
            stage = prod[:, 0, :]
            for i in range(1, n):
                nxt = prod[:, i, :].copy()
                nxt[:, 1:] = wrap(nxt[:, 1:] + stage[:, :-1], ab)
                if i < n - 1:
                    nxt[:, :max(0, i - z)] = 0
                self.acc[:, i - 1] = stage[:, -1]
                stage = nxt
            if hi > lo:
                qs = slice(lo + n - 1 - z, hi + n - 1 - z)
                addrs = slice(p.row * ol + lo, p.row * ol + hi)
                bank = self.sram[self._bank]
                seen = self.written[self._bank, addrs]
                if seen.all():
                    bank[:, addrs] = wrap(bank[:, addrs] + stage[:, qs], ab)
                else:
                    f0 = np.where(seen[None, :], bank[:, addrs], self.bias_reg[:, None])
                    bank[:, addrs] = wrap(stage[:, qs] + f0, ab)
                    self.written[self._bank, addrs] = True
        tl.cycle += il
        if z and n > 1:
            self._defer(p)
        self._close_pass(p)

    # ------------------------------------------------------------------

    def run(self, mode="pass"):
        if mode == "cycle":
            while self.step() is not None:
                pass
            if not self._done:
                self._finish()
        elif mode == "pass":
            while self._cursor < len(self.passes):
                if self._cursor == 0 or self.passes[self._cursor].group != \
                        self.passes[self._cursor - 1].group:
                    self.entry_states[self.passes[self._cursor].group] = copy.deepcopy(self.tl)
                self._stream_pass()
            self._finish()
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return self.result()

    def _finish(self):
        if self._done:
            return
        self._flush_pending(self.tl.cycle)
        if self.final:
            self.tl.cycle += 1
        self._done = True

    def result(self):
        u, n = self.arch.u, self.arch.n
        cycles = self.tl.cycle
        util = self.retained_products / (u * n * cycles) if cycles else 0.0
        if self.trace.log is not None:
            self.trace.log.sort(key=lambda r: r.cycle)
        return LayerRun(self.output, cycles, self.tl.stall_cycles, self.trace,
                        self.retained_products, util, self.tl.port_free)


def _run_group(args):
    arch, layer, x, filters, group, entry, final, log, checked = args
    eng = ConvEngine(arch, layer, x, filters, groups=[group], entry=entry, final=final,
                     log=log, checked=checked)
    return eng.run("pass")


def run_layer(arch, layer, x, filters, *, mode="pass", log=False, checked=False, threads=1):
    """Simulate one layer; returns a :class:`LayerRun`.

    With ``threads > 1`` filter groups run in worker processes, each resuming
    from the timeline state a data-free pass over the schedule reports for
    its group; results match the single-instance run exactly.
    """
    if not isinstance(filters, FilterSet):
        filters = FilterSet(*filters)
    tiling = derive_tiling(arch, layer)
    if threads <= 1 or tiling.g == 1 or mode != "pass":
        eng = ConvEngine(arch, layer, x, filters, log=log, checked=checked)
        return eng.run(mode)

    plan = ConvEngine(arch, layer, dry=True)
    plan.run("pass")
    jobs = [(arch, layer, x, filters, g, plan.entry_states[g], g == tiling.g - 1, log, checked)
            for g in range(tiling.g)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_run_group, jobs))

    output = np.zeros((layer.m, layer.ol, layer.ol), dtype=np.int16)
    trace = DramTrace(layer.name, log=[] if log else None)
    retained = 0
    for g, part in enumerate(parts):
        k0 = g * arch.u
        k1 = k0 + tiling.filters_in_group(g)
        output[k0:k1] = part.output[k0:k1]
        trace.merge(part.trace)
        retained += part.retained_products
    if trace.log is not None:
        trace.log.sort(key=lambda r: r.cycle)
    last = parts[-1]
    util = retained / (arch.u * arch.n * last.cycles)
    return LayerRun(output, last.cycles, last.stall_cycles, trace, retained, util,
                    last.drain_end)


def plan_layer(arch, layer, *, log=False):
    """Timing and traffic of one layer without any arithmetic."""
    return ConvEngine(arch, layer, dry=True, log=log).run("pass")
