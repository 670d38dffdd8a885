from pathlib import Path

import pytest

from perclab import _backend, _purepy

FIXTURES = Path(__file__).parent / "fixtures"


def _available():
    out = [pytest.param(_purepy, id="python")]
    try:
        from perclab import _kernels
    except ImportError:
        return out
    return [pytest.param(_kernels, id="compiled")] + out


@pytest.fixture(params=_available())
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", request.param)
    return request.param


@pytest.fixture(scope="session")
def golden():
    from perclab.oracle import read_fixtures

    return read_fixtures(FIXTURES / "golden.txt")


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config._acceptance_lines

    def record(number, passed, detail):
        line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
