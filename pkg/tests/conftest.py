import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=25, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


def dense(m):
    return m.toarray() if hasattr(m, "toarray") else np.asarray(m)


# criterion -> list of (part, ok, detail, seconds); filled by test_acceptance.py
ACCEPTANCE = {}
# stated runtime budgets (s); C8's is for 8 workers
BUDGET = {"C1": 1, "C2": 120, "C3": 30, "C4": 60, "C5": 300, "C6": 300, "C7": 60, "C8": 600, "C9": 300, "C10": None}


def record(criterion, part, ok, detail, seconds):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail, seconds))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        parts = ACCEPTANCE[cid]
        ok = all(p[1] for p in parts)
        secs = sum(p[3] for p in parts)
        detail = "; ".join(f"{p[0]} {'ok' if p[1] else 'FAIL'} ({p[2]})" for p in parts)
        budget = BUDGET.get(cid)
        timing = f"{secs:.1f}s" + (f" of {budget}s" if budget else "")
        tr.write_line(f"{cid} {'PASS' if ok else 'FAIL'} [{timing}] {detail}")
