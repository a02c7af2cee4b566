"""Bit-exact simulator and cost model of a serial-accumulation CNN accelerator."""
from .arch import (ArchConfig, HostOp, LayerEntry, LayerShape, NetworkSpec,
                   validate_arch, validate_layer, vgg16_conv_preset)
from .cost import (CostReport, LayerCost, TrafficBreakdown, analytic_cycles,
                   analytic_traffic, network_cost, sweep)
from .engine import ConvEngine, DramTrace, run_layer
from .fixed import FixedPointRules, requantize
from .golden import FilterSet, golden_conv, host_maxpool2x2, host_relu
from .reference import compare_to_published
from .schedule import derive_tiling, pass_sequence, valid_filter_rows

__version__ = "0.1.0"
