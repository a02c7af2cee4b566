"""Per-layer cost of VGG-16 on the default 64x3 engine, plus the published totals check.

    python scripts/reproduce_vgg16.py [--simulate LAYERS]

``--simulate`` additionally runs the listed layers (1-based, e.g. ``1,11``)
through the cycle engine on seeded data and confirms the analytic numbers.
"""
import argparse
import sys

import numpy as np

from sacc import ArchConfig, network_cost, vgg16_conv_preset
from sacc.engine import run_layer
from sacc.golden import golden_conv
from sacc.reference import compare_to_published
from sacc.runner import parse_layers, seeded_filters, seeded_input


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--simulate", help="layers to also run cycle-accurately")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    net, arch = vgg16_conv_preset(), ArchConfig()
    report = network_cost(net, arch)
    print(f"{'layer':<9}{'cycles':>11}{'ms':>9}{'MiB':>9}{'Gops':>8}{'util':>7}")
    for row in report.layers + (report.total,):
        print(f"{row.name:<9}{row.cycles:>11}{row.latency_ms:>9.2f}"
              f"{row.total_bytes / 2**20:>9.2f}{row.gops:>8.2f}{row.utilization:>7.3f}")
    print()
    cmp = compare_to_published(report)
    print(cmp.render())

    ok = cmp.passed
    for k in parse_layers(args.simulate, len(net)) if args.simulate else []:
        layer = net.shapes[k]
        x, f = seeded_input(layer, args.seed, k), seeded_filters(layer, args.seed, k)
        run = run_layer(arch, layer, x, f)
        expect = report.layers[k]
        exact = np.array_equal(run.output, golden_conv(layer, x, f, arch.rules))
        law = run.cycles - run.stall_cycles - 1 == expect.cycles
        print(f"{layer.name}: engine {run.cycles} cycles, {run.stall_cycles} stalls, "
              f"bit-exact={exact}, matches analytic={law}")
        ok = ok and exact and law
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
