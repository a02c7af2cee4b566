import numpy as np
import pytest

from conftest import random_case
from sacc.arch import ArchConfig, validate_layer, vgg16_conv_preset
from sacc.cost import analytic_cycles, analytic_traffic
from sacc.engine import ConvEngine, plan_layer, run_layer
from sacc.errors import (FilterWidthMismatch, LoggingDisabled, PingPongViolation,
                         RowTooWide, UnsupportedPadding, UnsupportedStride)
from sacc.golden import FilterSet, golden_conv

VGG = vgg16_conv_preset()


def _schedule_engine(seed=11):
    """One CU, one channel, one filter, no padding; first pass is filter row 0."""
    r = np.random.default_rng(seed)
    layer = validate_layer(il=6, ic=1, fl=3, z=0, m=1)
    x = r.integers(-100, 100, size=(1, 6, 6))
    w = r.integers(-50, 50, size=(1, 1, 3, 3))
    eng = ConvEngine(ArchConfig(u=1, out_shift=0), layer, x, FilterSet(w, [0]))
    return eng, x[0], w[0, 0]


def test_register_schedule():
    eng, x, w = _schedule_engine()
    ev = [eng.step() for _ in range(4)]
    x00, x01, x02, x03 = x[0, :4]
    w0, w1, w2 = w[0]
    assert [e.x for e in ev] == [x00, x01, x02, x03]
    assert all(e.kind == "stream" and e.pass_.filter_row == 0 for e in ev)
    # cycle 1: only ACC0 loads
    assert ev[0].acc[0].tolist() == [x00 * w0, 0]
    assert ev[0].write is None
    # cycle 2
    assert ev[1].acc[0].tolist() == [x01 * w0, x00 * w0 + x01 * w1]
    assert ev[1].write is None
    # cycle 3: first three-term partial reaches SRAM
    assert ev[2].acc[0].tolist() == [x02 * w0, x01 * w0 + x02 * w1]
    bank, addr, stored = ev[2].write
    assert addr == 0 and stored[0] == x00 * w0 + x01 * w1 + x02 * w2
    # cycle 4
    assert ev[3].acc[0].tolist() == [x03 * w0, x02 * w0 + x03 * w1]
    assert ev[3].write[1] == 1
    assert ev[3].write[2][0] == x01 * w0 + x02 * w1 + x03 * w2


def test_left_border_write():
    r = np.random.default_rng(2)
    layer = validate_layer(il=5, ic=1, fl=3, z=1, m=1)
    x = r.integers(-100, 100, size=(1, 5, 5))
    w = r.integers(-50, 50, size=(1, 1, 3, 3))
    eng = ConvEngine(ArchConfig(u=1, out_shift=0), layer, x, FilterSet(w, [7]))
    e0, e1 = eng.step(), eng.step()
    p = e0.pass_
    # output row 0 has no filter row 0, so the first pass serves output row 1
    assert (p.filter_row, p.out_row, p.in_row) == (0, 1, 0)
    assert e0.write is None
    wr = w[0, 0, 0]
    # the wr[0] term of column 0 is the forced left-pad zero; F0 injects the bias
    assert e1.write[1] == 1 * layer.ol + 0
    assert e1.write[2][0] == x[0, 0, 0] * wr[1] + x[0, 0, 1] * wr[2] + 7


def test_right_border_write_lands_next_pass():
    r = np.random.default_rng(4)
    layer = validate_layer(il=4, ic=1, fl=3, z=1, m=1)
    x = r.integers(-100, 100, size=(1, 4, 4))
    w = r.integers(-50, 50, size=(1, 1, 3, 3))
    eng = ConvEngine(ArchConfig(u=1, out_shift=0), layer, x, FilterSet(w, [0]))
    evs = [eng.step() for _ in range(5)]
    first = evs[0].pass_
    assert evs[4].q == 0 and evs[4].pass_ != first
    bank, addr, stored = evs[4].write
    wr = w[0, 0, first.filter_row]
    row = x[0, first.in_row]
    assert addr == first.row * layer.ol + layer.ol - 1
    assert stored[0] == row[2] * wr[0] + row[3] * wr[1]


def test_conv1_1_against_golden():
    layer = VGG.shapes[0]
    arch = ArchConfig()
    r = np.random.default_rng(0)
    x = r.integers(-32768, 32768, size=(layer.ic, 224, 224))
    f = FilterSet(r.integers(-32768, 32768, size=(64, 3, 3, 3)), r.integers(-2**31, 2**31, 64))
    run = run_layer(arch, layer, x, f, checked=True)
    assert np.array_equal(run.output, golden_conv(layer, x, f, arch.rules))
    assert run.cycles == 450_241
    assert run.stall_cycles == 0
    assert run.trace.weights_read == 387_072


def test_all_ones_example():
    layer = validate_layer(il=3, ic=1, fl=3, z=1, m=1)
    x = np.arange(1, 10).reshape(1, 3, 3)
    f = FilterSet(np.ones((1, 1, 3, 3)), [0])
    for mode in ("pass", "cycle"):
        run = run_layer(ArchConfig(out_shift=0), layer, x, f, mode=mode)
        assert run.output.tolist() == [[[12, 21, 16], [27, 45, 33], [24, 39, 28]]]


@pytest.mark.parametrize("z", [0, 1])
def test_slow_drain_stalls_but_stays_exact(rng, z):
    arch, layer, x, f = random_case(rng, il=10, ic=2, m=70, z=z, sram_depth=30,
                                    drain_words_per_cycle=0.05)
    run = run_layer(arch, layer, x, f, checked=True)
    assert run.stall_cycles > 0
    assert np.array_equal(run.output, golden_conv(layer, x, f, arch.rules))
    assert run.cycles - run.stall_cycles - 1 == analytic_cycles(layer, arch)


def test_cycle_and_pass_modes_agree(rng):
    for _ in range(6):
        arch, layer, x, f = random_case(rng, il=int(rng.integers(3, 9)), m=int(rng.integers(1, 70)),
                                        sram_depth=int(rng.integers(10, 40)),
                                        drain_words_per_cycle=float(rng.choice([0.02, 0.5, 1, 4])))
        if layer.ol > arch.sram_depth:
            continue
        a = run_layer(arch, layer, x, f, mode="pass", log=True, checked=True)
        b = run_layer(arch, layer, x, f, mode="cycle", log=True, checked=True)
        assert np.array_equal(a.output, b.output)
        assert (a.cycles, a.stall_cycles, a.retained_products, a.drain_end) == \
            (b.cycles, b.stall_cycles, b.retained_products, b.drain_end)
        assert a.trace == b.trace


def test_cycle_mode_event_kinds(rng):
    arch, layer, x, f = random_case(rng, il=5, ic=1, m=3, z=1, sram_depth=10,
                                    drain_words_per_cycle=0.1)
    eng = ConvEngine(arch, layer, x, f, checked=True)
    kinds = []
    while (ev := eng.step()) is not None:
        kinds.append(ev.kind)
    assert kinds[-1] == "flush"
    assert kinds.count("stall") == eng.tl.stall_cycles > 0
    assert len(kinds) == eng.tl.cycle


def test_threads_are_bit_identical(rng):
    arch, layer, x, f = random_case(rng, il=8, ic=3, m=130, z=1, sram_depth=16,
                                    drain_words_per_cycle=0.1)
    seq = run_layer(arch, layer, x, f, log=True, checked=True)
    par = run_layer(arch, layer, x, f, log=True, checked=True, threads=3)
    assert np.array_equal(seq.output, par.output)
    assert (seq.cycles, seq.stall_cycles, seq.retained_products) == \
        (par.cycles, par.stall_cycles, par.retained_products)
    assert seq.trace == par.trace


def test_weight_words_conv1_1_tile():
    layer = VGG.shapes[0]
    run = plan_layer(ArchConfig(), layer, log=True)
    w_tile0 = sum(r.words for r in run.trace.records()
                  if r.category == "W" and r.cycle < 3 * 5 * 224)
    assert w_tile0 == 64 * 3 * 3 * 3
    assert run.trace.weights_read == 1 * 112 * 64 * 9 * 3 * 2


def test_idle_cus_fetch_nothing(rng):
    arch, layer, x, f = random_case(rng, il=6, ic=2, m=70, z=1)
    run = run_layer(arch, layer, x, f, log=True)
    w_words = [r.words for r in run.trace.records() if r.category == "W"]
    # first group: 64 real filters, second: 6
    assert set(w_words) == {64 * 3, 6 * 3}
    assert run.trace.weights_read == 70 * 2 * 3 * 3 * 2


def test_drain_sizes():
    run = plan_layer(ArchConfig(), VGG.shapes[0], log=True)
    outs = [r for r in run.trace.records() if r.category == "O"]
    assert outs[0].words == 2 * 224 * 64        # 448 words per CU bank
    assert run.trace.outputs_written == 224 * 224 * 64 * 2

    run = plan_layer(ArchConfig(), VGG.shapes[10], log=True)
    outs = [r.words // 64 for r in run.trace.records() if r.category == "O"]
    assert set(outs) == {196}

    layer = validate_layer(il=10, ic=1, fl=3, z=1, m=2)
    run = plan_layer(ArchConfig(sram_depth=40), layer, log=True)
    assert [r.words // 2 for r in run.trace.records() if r.category == "O"] == [40, 40, 20]


def test_default_vgg_tiles_never_stall():
    # drain of one tile finishes long before the next tile on that bank starts
    for layer in VGG.shapes[:2] + VGG.shapes[10:11]:
        assert plan_layer(ArchConfig(), layer).stall_cycles == 0


def test_ping_pong_violation_detected(rng):
    arch, layer, x, f = random_case(rng, il=6, ic=1, m=2, z=1, sram_depth=12,
                                    drain_words_per_cycle=0.05)
    eng = ConvEngine(arch, layer, x, f, checked=True)
    # sabotage the stall logic: pretend every bank is free
    eng.tl.busy_until = _AlwaysZero()
    with pytest.raises(PingPongViolation):
        eng.run()


class _AlwaysZero(list):
    def __getitem__(self, i):
        return 0

    def __setitem__(self, i, v):
        pass


def test_trace_conservation(rng):
    arch, layer, x, f = random_case(rng, il=9, ic=3, m=80, z=1, sram_depth=30)
    run = run_layer(arch, layer, x, f, log=True)
    recs = run.trace.records()
    assert recs[0].category == "W"
    for cat, total in (("W", run.trace.weights_read), ("I", run.trace.inputs_read),
                       ("O", run.trace.outputs_written)):
        assert 2 * sum(r.words for r in recs if r.category == cat) == total
    assert run.trace == run_layer(arch, layer, x, f, log=True).trace
    t = analytic_traffic(layer, arch)
    assert (run.trace.weights_read, run.trace.inputs_read, run.trace.outputs_written) == \
        (t.weights_read, t.inputs_read, t.outputs_written)


def test_logging_disabled(rng):
    arch, layer, x, f = random_case(rng, il=4)
    with pytest.raises(LoggingDisabled):
        run_layer(arch, layer, x, f).trace.records()


def test_utilization_bound():
    layer = VGG.shapes[10]
    run = plan_layer(ArchConfig(), layer)
    per_pass = 3 * layer.il - 2
    assert run.retained_products == 8 * 64 * 512 * 40 * per_pass
    assert run.utilization >= 1 - 2 / (3 * layer.il) - 1e-6
    assert run.utilization >= 0.952


def test_engine_errors(rng):
    x = np.zeros((1, 9, 9))
    f = FilterSet(np.zeros((1, 1, 3, 3)), [0])
    with pytest.raises(UnsupportedStride):
        run_layer(ArchConfig(), validate_layer(9, 1, 3, z=0, s=2, m=1), x, f)
    with pytest.raises(FilterWidthMismatch):
        run_layer(ArchConfig(), validate_layer(9, 1, 5, z=0, m=1), x,
                  FilterSet(np.zeros((1, 1, 5, 5)), [0]))
    with pytest.raises(RowTooWide):
        run_layer(ArchConfig(sram_depth=8), validate_layer(9, 1, 3, z=1, m=1), x, f)
    with pytest.raises(UnsupportedPadding):
        run_layer(ArchConfig(), validate_layer(9, 1, 3, z=2, m=1), x, f)


def test_other_chain_lengths(rng):
    for n in (1, 5):
        layer = validate_layer(il=9, ic=2, fl=n, z=(n - 1) // 2 and 1, m=5)
        arch = ArchConfig(n=n, u=4, out_shift=3)
        x = rng.integers(-200, 200, size=(2, 9, 9))
        f = FilterSet(rng.integers(-64, 65, size=(5, 2, n, n)), rng.integers(-99, 99, 5))
        a = run_layer(arch, layer, x, f, checked=True)
        b = run_layer(arch, layer, x, f, mode="cycle", checked=True)
        g = golden_conv(layer, x, f, arch.rules)
        assert np.array_equal(a.output, g) and np.array_equal(b.output, g)
        assert a.cycles - 1 == analytic_cycles(layer, arch) == b.cycles - 1


@pytest.mark.parametrize("word_bits", [24, 32, 40])
def test_accumulator_widths_match_oracle(rng, word_bits):
    # full-range operands so narrow accumulators actually wrap
    arch, layer, x, f = random_case(rng, il=7, ic=4, m=5, z=1, wmax=32767, xmax=32768,
                                    out_shift=int(rng.integers(0, 16)),
                                    sram_word_bits=word_bits, sram_depth=14,
                                    drain_words_per_cycle=0.25)
    want = golden_conv(layer, x, f, arch.rules)
    for mode in ("pass", "cycle"):
        run = run_layer(arch, layer, x, f, mode=mode, checked=True)
        assert np.array_equal(run.output, want), mode
