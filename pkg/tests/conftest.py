import numpy as np
import pytest

from sacc.arch import ArchConfig, validate_layer
from sacc.golden import FilterSet


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False,
                     help="run full-network cycle-accurate simulations")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def random_case(rng, il=None, ic=None, m=None, z=None, wmax=64, xmax=128, out_shift=None,
                **arch_kw):
    il = int(rng.integers(3, 17)) if il is None else il
    ic = int(rng.integers(1, 9)) if ic is None else ic
    m = int(rng.integers(1, 131)) if m is None else m
    z = int(rng.integers(0, 2)) if z is None else z
    if il < 3 and z == 0:
        il = 3
    layer = validate_layer(il, ic, 3, z=z, m=m, name="rand")
    shift = int(rng.integers(0, 12)) if out_shift is None else out_shift
    arch = ArchConfig(out_shift=shift, **arch_kw)
    x = rng.integers(-xmax, xmax, size=(ic, il, il))
    f = FilterSet(rng.integers(-wmax, wmax + 1, size=(m, ic, 3, 3)),
                  rng.integers(-5000, 5001, size=m))
    return arch, layer, x, f


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the session summary prints them in order."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def record(number, ok, detail):
        lines.append((number, f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
