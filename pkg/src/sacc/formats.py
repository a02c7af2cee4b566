"""On-disk formats: tensor files, JSON configs, weight archives, reports, traces.

Tensor file layout (all little-endian)::

    b"SACC"  u32 version=1  u32 channels  u32 rows  u32 cols
    channels*rows*cols int16, channel-major
"""
import csv
import io
import json
import struct
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .arch import (ArchConfig, HostOp, LayerEntry, LayerShape, NetworkSpec,
                   vgg16_conv_preset)
from .errors import SaccError, ShapeMismatch
from .golden import FilterSet

MAGIC = b"SACC"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


class TensorFileError(SaccError):
    pass


def write_tensor(path, t):
    t = np.asarray(t)
    if t.ndim != 3:
        raise ShapeMismatch(f"tensor must be 3-D, got shape {t.shape}")
    if t.size and (t.min() < -32768 or t.max() > 32767):
        raise ShapeMismatch("tensor values exceed int16")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, *t.shape))
        fh.write(t.astype("<i2").tobytes())


def read_tensor(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TensorFileError(f"{path}: truncated header")
    magic, version, c, h, w = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TensorFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise TensorFileError(f"{path}: unsupported version {version}")
    payload = raw[_HEADER.size:]
    if len(payload) != 2 * c * h * w:
        raise TensorFileError(
            f"{path}: payload has {len(payload)} bytes, header implies {2 * c * h * w}")
    return np.frombuffer(payload, dtype="<i2").reshape(c, h, w).astype(np.int16)


# --- configs ---------------------------------------------------------------

ARCH_KEYS = [f.name for f in fields(ArchConfig)]
LAYER_KEYS = ("il", "ic", "fl", "fh", "z", "s", "m")


def arch_to_dict(arch):
    return asdict(arch)


def arch_from_dict(d):
    missing = [k for k in ARCH_KEYS if k not in d]
    if missing:
        raise SaccError(f"arch config missing keys: {', '.join(missing)}")
    unknown = set(d) - set(ARCH_KEYS)
    if unknown:
        raise SaccError(f"arch config has unknown keys: {', '.join(sorted(unknown))}")
    return ArchConfig(**d)


def load_arch(path=None):
    if path is None:
        return ArchConfig()
    return arch_from_dict(json.loads(Path(path).read_text()))


def save_arch(arch, path):
    Path(path).write_text(json.dumps(arch_to_dict(arch), indent=2) + "\n")


def net_to_dict(net):
    layers = []
    for e in net.layers:
        d = {"name": e.shape.name}
        d.update({k: getattr(e.shape, k) for k in LAYER_KEYS})
        d["host_op"] = e.host_op.value
        layers.append(d)
    return {"name": net.name, "layers": layers}


def net_from_dict(d):
    entries = []
    for k, raw in enumerate(d.get("layers", [])):
        missing = [key for key in LAYER_KEYS + ("host_op",) if key not in raw]
        if missing:
            raise SaccError(f"layer {k} missing keys: {', '.join(missing)}")
        shape = LayerShape(**{key: raw[key] for key in LAYER_KEYS},
                           name=raw.get("name", f"layer{k + 1}"))
        entries.append(LayerEntry(shape, HostOp(raw["host_op"])))
    return NetworkSpec(entries, name=d.get("name"))


def load_net(spec="vgg16"):
    if spec in (None, "vgg16"):
        return vgg16_conv_preset()
    return net_from_dict(json.loads(Path(spec).read_text()))


def save_net(net, path):
    Path(path).write_text(json.dumps(net_to_dict(net), indent=2) + "\n")


# --- weights ---------------------------------------------------------------

def save_weights(path, filters_by_layer):
    """``filters_by_layer`` maps layer name to :class:`FilterSet`."""
    arrays = {}
    for name, fs in filters_by_layer.items():
        arrays[f"{name}.weights"] = fs.weights.astype(np.int16)
        arrays[f"{name}.biases"] = fs.biases.astype(np.int64)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_weights(path, layer):
    with np.load(path) as data:
        key = f"{layer.name}.weights"
        if key not in data:
            raise SaccError(f"{path}: no weights for layer {layer.name!r}")
        return FilterSet(data[key], data[f"{layer.name}.biases"])


# --- reports ---------------------------------------------------------------

REPORT_COLUMNS = ("layer", "cycles", "latency_ms", "weights_bytes", "inputs_bytes",
                  "outputs_bytes", "total_bytes", "nominal_macs", "gops", "utilization")


def report_row(cost):
    return {
        "layer": cost.name,
        "cycles": cost.cycles,
        "latency_ms": cost.latency_ms,
        "weights_bytes": cost.traffic.weights_read,
        "inputs_bytes": cost.traffic.inputs_read,
        "outputs_bytes": cost.traffic.outputs_written,
        "total_bytes": cost.total_bytes,
        "nominal_macs": cost.nominal_macs,
        "gops": cost.gops,
        "utilization": cost.utilization,
    }


def emit_report(report, fmt="csv", extras=None):
    """Render a cost report; ``extras`` adds per-layer fields to JSON only."""
    rows = [report_row(l) for l in report.layers] + [report_row(report.total)]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()
    if fmt == "json":
        extras = extras or {}
        for row in rows[:-1]:
            row.update(extras.get(row["layer"], {}))
        doc = {
            "network": report.network,
            "arch": arch_to_dict(report.arch),
            "layers": rows[:-1],
            "total": rows[-1],
            "dram_mib": report.dram_mib,
            "dram_mb": report.dram_mb,
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


TRACE_COLUMNS = ("cycle", "layer", "category", "words")


def dump_trace(traces, path):
    """Write transaction logs of one or more :class:`DramTrace` objects as CSV."""
    if not isinstance(traces, (list, tuple)):
        traces = [traces]
    records = [rec for tr in traces for rec in tr.records()]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(records)
    return len(records)


def read_trace(path):
    with open(path, newline="") as fh:
        return [(int(r["cycle"]), r["layer"], r["category"], int(r["words"]))
                for r in csv.DictReader(fh)]
