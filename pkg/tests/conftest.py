import itertools

import numpy as np
import pytest

from subqubo import QuboInstance


def naive_value(inst, x):
    """Objective by explicit summation over the coupling dict."""
    total = inst.offset
    for i in range(inst.n):
        total += inst.linear[i] * x[i]
    for (i, j), c in inst.couplings.items():
        total += c * x[i] * x[j]
    return total


def brute_force(inst):
    """Global minimum and a minimizer by enumerating every assignment."""
    best_val, best_x = np.inf, None
    for bits in itertools.product((0, 1), repeat=inst.n):
        v = naive_value(inst, bits)
        if v < best_val:
            best_val, best_x = v, np.array(bits)
    return best_val, best_x


def random_instance(rng, n, density=1.0, offset=0.0):
    lin = rng.normal(size=n)
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                couplings[(i, j)] = float(rng.normal())
    return QuboInstance(n, lin, couplings, offset)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def report(request):
    """Record one pass/fail line per acceptance criterion and assert it."""

    def _report(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
        request.config._acceptance_lines.append(line)
        print(line)
        assert ok, line

    return _report
