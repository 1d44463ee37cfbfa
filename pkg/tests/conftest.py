import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

import oracles  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

LEDGER_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "oracle_ledger.json")


def pytest_sessionfinish(session, exitstatus):
    if oracles.LEDGER:
        oracles.write_ledger(LEDGER_PATH)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[k])
