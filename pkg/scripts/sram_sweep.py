"""How SRAM depth and CU count trade latency against DRAM traffic on VGG-16.

    python scripts/sram_sweep.py --depths 224,448,896,1792 --us 32,64,128 --csv out.csv
"""
import argparse
import csv
import sys

from sacc import ArchConfig, vgg16_conv_preset
from sacc.cost import sweep


def _ints(text):
    return [int(v) for v in text.split(",")]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depths", type=_ints, default=[224, 448, 896, 1792])
    ap.add_argument("--us", type=_ints, default=[64])
    ap.add_argument("--csv", help="also write the table to this file")
    args = ap.parse_args(argv)

    points = sweep(vgg16_conv_preset(), ArchConfig(), args.depths, args.us)
    header = ["sram_depth", "u", "latency_ms", "weights_mib", "total_mib", "error"]
    rows = []
    for p in points:
        if p.error:
            rows.append([p.sram_depth, p.u, "", "", "", p.error])
            continue
        tot = p.report.total
        rows.append([p.sram_depth, p.u, f"{tot.latency_ms:.2f}",
                     f"{p.weights_bytes / 2**20:.2f}", f"{p.total_bytes / 2**20:.2f}", ""])

    widths = [10, 5, 12, 12, 11, 0]
    print("".join(f"{h:>{w}}" if w else f"  {h}" for h, w in zip(header, widths)))
    for row in rows:
        print("".join(f"{v:>{w}}" if w else f"  {v}" for v, w in zip(row, widths)))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
