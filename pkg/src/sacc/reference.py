"""Comparison of a full VGG-16 cost report against the published figures."""
from dataclasses import dataclass

from .arch import vgg16_conv_preset
from .errors import NotDefaultConfig

# published figures for the 64x3 serial-accumulation design on VGG-16
PUBLISHED = {"latency_ms": 393.0, "dram_mib": 251.5, "gops": 78.1}
TOLERANCE = 0.005


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    model: float
    published: float

    @property
    def rel_error(self):
        return abs(self.model - self.published) / self.published

    @property
    def ok(self):
        return self.rel_error <= TOLERANCE


@dataclass(frozen=True)
class Comparison:
    rows: tuple

    @property
    def passed(self):
        return all(r.ok for r in self.rows)

    def render(self):
        lines = [f"{'metric':<12}{'model':>14}{'published':>12}{'rel.err':>10}  status"]
        for r in self.rows:
            lines.append(f"{r.metric:<12}{r.model:>14.4f}{r.published:>12.1f}"
                         f"{100 * r.rel_error:>9.3f}%  {'ok' if r.ok else 'FAIL'}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def compare_to_published(report):
    if not report.arch.matches_published():
        raise NotDefaultConfig("comparison requires the published architecture parameters")
    expected = [s.name for s in vgg16_conv_preset().shapes]
    if [l.name for l in report.layers] != expected:
        raise NotDefaultConfig("comparison requires a report covering all 13 VGG-16 conv layers")
    tot = report.total
    return Comparison((
        ComparisonRow("latency_ms", tot.latency_ms, PUBLISHED["latency_ms"]),
        ComparisonRow("dram_mib", report.dram_mib, PUBLISHED["dram_mib"]),
        ComparisonRow("gops", tot.gops, PUBLISHED["gops"]),
    ))
