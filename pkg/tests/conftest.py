import pytest

from usbee.modem import ModemConfig

_verdicts = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def default_cfg():
    return ModemConfig()


@pytest.fixture(scope="session")
def cheap_cfg():
    """Low-rate tones so full envelope runs stay small (1875-sample chunks)."""
    return ModemConfig(f0_units=10, f1_units=20, sample_rate_hz=4.8e6)


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then fail the test if needed."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        request.config.stash.setdefault(_verdicts, []).append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_verdicts, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
