"""Layer-by-layer network execution with host-side activations between layers."""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .cost import CostReport, LayerCost, TrafficBreakdown, layer_cost, nominal_macs
from .engine import plan_layer, run_layer
from .errors import LayerError, SaccError
from .formats import load_arch, load_net, load_weights, read_tensor
from .golden import FilterSet, apply_host_op, golden_conv

log = logging.getLogger(__name__)

MODES = ("cost", "simulate", "verify")
WEIGHT_RANGE = 64
BIAS_RANGE = 4096
INPUT_RANGE = 128
_INPUT_STREAM = 0xFFFF


def seeded_filters(layer, seed, index):
    """Weights uniform in [-64, 64], biases uniform in [-4096, 4096]."""
    rng = np.random.default_rng([seed, index])
    w = rng.integers(-WEIGHT_RANGE, WEIGHT_RANGE + 1, size=(layer.m, layer.ic, layer.fh, layer.fl))
    b = rng.integers(-BIAS_RANGE, BIAS_RANGE + 1, size=layer.m)
    return FilterSet(w, b)


def seeded_input(layer, seed, index=0):
    """Input features uniform in [-128, 127]."""
    rng = np.random.default_rng([seed, _INPUT_STREAM, index])
    return rng.integers(-INPUT_RANGE, INPUT_RANGE, size=(layer.ic, layer.il, layer.il)) \
        .astype(np.int16)


def parse_layers(text, count):
    """1-based layer selection such as ``"1-2"``, ``"3,5"`` or ``"11"``."""
    if text in (None, "", "all"):
        return list(range(count))
    picked = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(part)
        if not 1 <= lo <= hi <= count:
            raise SaccError(f"layer range {part!r} outside 1..{count}")
        picked.extend(range(lo - 1, hi))
    return sorted(set(picked))


@dataclass
class RunManifest:
    net: str = "vgg16"
    arch: Optional[str] = None
    weights: Optional[str] = None     # .npz archive; seeded weights when absent
    seed: int = 0
    input: Optional[str] = None       # tensor file; seeded input when absent
    mode: str = "cost"
    layers: Optional[str] = None
    output: Optional[str] = None      # tensor file for the final activation
    report: Optional[str] = None
    report_format: str = "csv"
    trace_out: Optional[str] = None
    threads: int = 1
    engine_mode: str = "pass"
    checked: bool = False

    def check(self):
        if self.mode not in MODES:
            raise SaccError(f"mode must be one of {MODES}, got {self.mode!r}")
        for key in ("arch", "weights", "input"):
            path = getattr(self, key)
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"{key} file not found: {path}")
        if self.net != "vgg16" and not Path(self.net).is_file():
            raise FileNotFoundError(f"net file not found: {self.net}")


def load_manifest(path):
    """Read a JSON manifest; relative paths resolve against its directory."""
    path = Path(path)
    raw = json.loads(path.read_text())
    base = path.parent
    for key in ("arch", "weights", "input", "output", "report", "trace_out"):
        if raw.get(key):
            raw[key] = str(base / raw[key])
    if raw.get("net") and raw["net"] != "vgg16":
        raw["net"] = str(base / raw["net"])
    return RunManifest(**raw)


@dataclass
class LayerResult:
    index: int
    name: str
    cost: LayerCost
    stall_cycles: int = 0
    trace: object = None
    bit_exact: Optional[bool] = None


@dataclass
class NetworkRun:
    arch: object
    net: object
    layers: list = field(default_factory=list)
    output: Optional[np.ndarray] = None

    @property
    def report(self):
        return CostReport(self.arch, tuple(r.cost for r in self.layers), self.net.name or "")

    @property
    def ok(self):
        return all(r.bit_exact is not False for r in self.layers)

    def extras(self):
        out = {}
        for r in self.layers:
            d = {"stall_cycles": r.stall_cycles}
            if r.bit_exact is not None:
                d["bit_exact"] = r.bit_exact
            out[r.name] = d
        return out


def _engine_cost(layer, arch, run):
    return LayerCost(
        name=layer.name, cycles=run.cycles,
        traffic=TrafficBreakdown(run.trace.weights_read, run.trace.inputs_read,
                                 run.trace.outputs_written),
        nominal_macs=nominal_macs(layer), retained_products=run.retained_products,
        clock_hz=arch.clock_hz, pe_count=arch.pe_count)


def run_network(manifest):
    manifest.check()
    arch = load_arch(manifest.arch)
    net = load_net(manifest.net)
    picked = parse_layers(manifest.layers, len(net))
    result = NetworkRun(arch, net.select(picked))

    if manifest.mode == "cost":
        for k in picked:
            entry = net.layers[k]
            try:
                result.layers.append(LayerResult(k, entry.name, layer_cost(entry.shape, arch)))
            except SaccError as e:
                raise LayerError(k, entry.name, e) from e
        return result

    x = None
    prev = None
    for k in picked:
        entry = net.layers[k]
        layer = entry.shape
        if x is None or prev != k - 1:
            x = read_tensor(manifest.input) if (manifest.input and x is None) \
                else seeded_input(layer, manifest.seed, k)
        try:
            filters = load_weights(manifest.weights, layer) if manifest.weights \
                else seeded_filters(layer, manifest.seed, k)
            run = run_layer(arch, layer, x, filters, mode=manifest.engine_mode,
                            log=manifest.trace_out is not None, checked=manifest.checked,
                            threads=manifest.threads)
            res = LayerResult(k, layer.name, _engine_cost(layer, arch, run),
                              run.stall_cycles, run.trace)
            if manifest.mode == "verify":
                res.bit_exact = bool(np.array_equal(run.output, golden_conv(layer, x, filters,
                                                                            arch.rules)))
                log.info("%s: bit-exact=%s", layer.name, res.bit_exact)
        except SaccError as e:
            raise LayerError(k, layer.name, e) from e
        result.layers.append(res)
        x = apply_host_op(run.output, entry.host_op)
        prev = k
    result.output = x
    return result


def plan_network(net, arch, picked=None, log_trace=False):
    """Timing-only pass over layers: stalls and traffic without arithmetic."""
    picked = range(len(net)) if picked is None else picked
    runs = []
    for k in picked:
        layer = net.layers[k].shape
        try:
            runs.append((k, layer, plan_layer(arch, layer, log=log_trace)))
        except SaccError as e:
            raise LayerError(k, layer.name, e) from e
    return runs

