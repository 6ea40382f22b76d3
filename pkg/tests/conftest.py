import pytest

from nbiot_sls.config import SimConfig
from nbiot_sls.engine import Simulator

# acceptance tests append (criterion, passed, detail); printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def small_config(**kw):
    base = dict(num_terminals=60, num_ttis=400, edrx_enabled=False)
    base.update(kw)
    return SimConfig(**base)


@pytest.fixture(scope="session")
def small_run():
    cfg = small_config()
    return Simulator(cfg).run()
