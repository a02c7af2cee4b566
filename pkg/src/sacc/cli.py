"""Command-line entry point: ``sacc <command> [options]``."""
import argparse
import logging
import sys

from .cost import network_cost, sweep
from .errors import SaccError
from .formats import dump_trace, emit_report, load_arch, load_net, write_tensor
from .reference import compare_to_published
from .runner import (RunManifest, load_manifest, parse_layers, plan_network,
                     run_network)


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _common(p):
    p.add_argument("--arch", help="architecture config (JSON); defaults to the 64x3 preset")
    p.add_argument("--net", default="vgg16", help="network config (JSON) or 'vgg16'")
    p.add_argument("--layers", help="1-based selection, e.g. 1-2 or 11,12")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1)


def _sim_args(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", help=".npz weight archive (seeded weights if omitted)")
    p.add_argument("--input", help="input tensor file (seeded input if omitted)")
    p.add_argument("--output", help="write the final activation as a tensor file")
    p.add_argument("--trace-out", help="write the DRAM transaction log as CSV")
    p.add_argument("--mode", choices=("pass", "cycle"), default="pass",
                   help="engine stepping granularity")
    p.add_argument("--checked", action="store_true",
                   help="assert ping-pong bank safety on every write")


def build_parser():
    ap = argparse.ArgumentParser(prog="sacc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cost", help="closed-form cycles, traffic and throughput")
    _common(p)
    for name, hlp in (("simulate", "run the cycle-accurate engine"),
                      ("verify", "run the engine and check every layer against the oracle")):
        p = sub.add_parser(name, help=hlp)
        _common(p)
        _sim_args(p)

    p = sub.add_parser("sweep", help="design-space sweep over SRAM depth / CU count")
    _common(p)
    p.add_argument("--sram-depth", type=_int_list, default=[224, 448, 896])
    p.add_argument("--u", type=_int_list)
    p.add_argument("--n", type=_int_list)

    p = sub.add_parser("trace", help="DRAM transaction log from a timing-only run")
    _common(p)
    p.add_argument("--trace-out", required=True)

    p = sub.add_parser("compare-paper", help="check VGG-16 totals against the published table")
    p.add_argument("--arch")

    p = sub.add_parser("run", help="execute a JSON run manifest")
    p.add_argument("manifest")
    return ap


def _print(text):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_cost(args):
    net = load_net(args.net)
    arch = load_arch(args.arch)
    net = net.select(parse_layers(args.layers, len(net)))
    _print(emit_report(network_cost(net, arch), args.format))
    return 0


def _emit_run(result, fmt, manifest):
    text = emit_report(result.report, fmt, extras=result.extras())
    if manifest.report:
        with open(manifest.report, "w") as fh:
            fh.write(text)
    else:
        _print(text)
    if manifest.output and result.output is not None:
        write_tensor(manifest.output, result.output)
    if manifest.trace_out:
        dump_trace([r.trace for r in result.layers], manifest.trace_out)
    if manifest.mode == "verify":
        for r in result.layers:
            print(f"{r.name}: {'bit-exact' if r.bit_exact else 'MISMATCH'}", file=sys.stderr)
    return 0 if result.ok else 1


def _cmd_simulate(args):
    manifest = RunManifest(net=args.net, arch=args.arch, weights=args.weights, seed=args.seed,
                           input=args.input, mode=args.command, layers=args.layers or "1",
                           output=args.output, report_format=args.format,
                           trace_out=args.trace_out, threads=args.threads,
                           engine_mode=args.mode, checked=args.checked)
    return _emit_run(run_network(manifest), args.format, manifest)


def _cmd_run(args):
    manifest = load_manifest(args.manifest)
    return _emit_run(run_network(manifest), manifest.report_format, manifest)


def _cmd_sweep(args):
    net = load_net(args.net)
    net = net.select(parse_layers(args.layers, len(net)))
    points = sweep(net, load_arch(args.arch), args.sram_depth, args.u, args.n)
    cols = ("sram_depth", "u", "n", "cycles", "weights_bytes", "total_bytes", "error")
    _print(",".join(cols))
    for pt in points:
        _print(",".join(str(getattr(pt, c)) for c in cols))
    return 0 if all(not pt.error for pt in points) else 1


def _cmd_trace(args):
    net = load_net(args.net)
    runs = plan_network(net, load_arch(args.arch), parse_layers(args.layers, len(net)),
                        log_trace=True)
    count = dump_trace([run.trace for _, _, run in runs], args.trace_out)
    for _, layer, run in runs:
        _print(f"{layer.name}: cycles={run.cycles} stalls={run.stall_cycles} "
               f"bytes={run.trace.total}")
    _print(f"{count} records written to {args.trace_out}")
    return 0


def _cmd_compare(args):
    report = network_cost(load_net("vgg16"), load_arch(args.arch))
    cmp = compare_to_published(report)
    _print(cmp.render())
    return 0 if cmp.passed else 1


COMMANDS = {"cost": _cmd_cost, "simulate": _cmd_simulate, "verify": _cmd_simulate,
            "sweep": _cmd_sweep, "trace": _cmd_trace, "compare-paper": _cmd_compare,
            "run": _cmd_run}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SaccError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
