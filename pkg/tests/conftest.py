import numpy as np
import pytest

from cpsdapprox.rep import CpsdInstance, GramRep


def random_sym(rng, d):
    a = rng.standard_normal((d, d))
    return (a + a.T) / 2


def random_psd(rng, d, k=None, trace=None):
    w = rng.standard_normal((d, k or d))
    a = w @ w.T
    if trace is not None:
        a *= trace / np.trace(a)
    return a


def skewed_instance(rng, n, d, spike=10.0, noise=0.02):
    """Factors ``spike * u u^t`` plus a small full-rank part: high rank, small trace-to-norm ratio."""
    factors = []
    for _ in range(n):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        w = rng.standard_normal((d, d))
        factors.append(spike * np.outer(u, u) + noise * (w @ w.T) / d)
    return CpsdInstance.from_witness(GramRep(np.stack(factors)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _lines(config):
    if not hasattr(config, "_acceptance_lines"):
        config._acceptance_lines = []
    return config._acceptance_lines


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for a criterion, then assert it."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        _lines(request.config).append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = _lines(config)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
