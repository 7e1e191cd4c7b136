import os
import sys
import time
from pathlib import Path

import pytest

# every planner and household solve in the suite verifies its invariants,
# including solves in worker processes and CLI subprocesses
from prosumage.model import INVARIANT_ENV

os.environ[INVARIANT_ENV] = "1"
sys.path.insert(0, str(Path(__file__).parent))

from prosumage.scenario import Setup  # noqa: E402
from prosumage.search import sweep  # noqa: E402
from prosumage.tariffs import TariffScheme  # noqa: E402
from prosumage.toy import toy_config, toy_scenario  # noqa: E402

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
CRITERIA = {
    1: "zero-omega degeneracy",
    2: "bill-curve convexity",
    3: "adder monotonicity",
    4: "dominance / positive bill gap",
    5: "RTP 100 pathology direction",
    6: "battery substitution direction",
    7: "LP layer correctness",
    8: "tariff arithmetic",
    9: "structural invariants",
    10: "loss accounting",
}


@pytest.fixture
def record():
    """record(n, ok, detail) stores the outcome of acceptance criterion n."""

    def _record(n: int, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE[n] = (bool(ok), detail)
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, label in CRITERIA.items():
        if n not in ACCEPTANCE:
            tr.write_line(f"criterion {n:>2} {label}: NOT RUN")
            continue
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n:>2} {label}: {'PASS' if ok else 'FAIL'}  {detail}")


class SweepCache:
    """Sweeps shared between tests, with the wall time of each."""

    def __init__(self):
        self._store = {}

    def get(self, setup=Setup.NO_BEVS, kind="Fixed", variant="InvariantAdder", adder=200.0, refine=True, **cfg):
        key = (setup, kind, variant, adder, refine, tuple(sorted(cfg.items())))
        if key not in self._store:
            config = toy_config(setup=setup, tariff=TariffScheme(kind, variant, adder), **cfg)
            sc = toy_scenario(config, seed=1)
            t = time.perf_counter()
            curve = sweep(sc, refine=refine)
            self._store[key] = (sc, curve, time.perf_counter() - t)
        return self._store[key]


@pytest.fixture(scope="session")
def sweeps():
    return SweepCache()


@pytest.fixture(scope="session")
def toy_week():
    """One-week toy without vehicles, for quick model tests."""
    return toy_scenario(toy_config(horizon=168), seed=1)


@pytest.fixture(scope="session")
def toy_bev_2day():
    return toy_scenario(toy_config(setup=Setup.WITH_BEVS, horizon=48), seed=1)
