import time

import pytest

ACCEPTANCE_LINES = []


class CriterionReport:
    """Times one acceptance criterion and records a single PASS/FAIL line for it."""

    def __init__(self, number: int, title: str, budget: float):
        self.number, self.title, self.budget = number, title, budget
        self.notes = []
        self.start = time.perf_counter()

    def note(self, text: str):
        self.notes.append(text)

    def finish(self, ok: bool, error: str = ""):
        elapsed = time.perf_counter() - self.start
        in_time = elapsed < self.budget
        status = "PASS" if ok and in_time else "FAIL"
        detail = "; ".join(self.notes + ([error] if error else []) + ([] if in_time else ["over time budget"]))
        line = f"criterion {self.number:2d} {status}  {self.title}  [{elapsed:.1f}s of {self.budget:.0f}s]"
        if detail:
            line += f"  {detail}"
        ACCEPTANCE_LINES.append(line)
        return elapsed


@pytest.fixture
def criterion(request, capsys):
    """Usage: ``with criterion(7, "title", budget_s) as rep: ...``; the line is printed either way."""
    reports = []

    class _Ctx:
        def __init__(self, number, title, budget):
            self.rep = CriterionReport(number, title, budget)

        def __enter__(self):
            reports.append(self.rep)
            return self.rep

        def __exit__(self, exc_type, exc, tb):
            err = "" if exc is None else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            elapsed = self.rep.finish(exc is None, err)
            with capsys.disabled():
                print("\n" + ACCEPTANCE_LINES[-1])
            if exc is None:
                assert elapsed < self.rep.budget, f"criterion {self.rep.number} exceeded {self.rep.budget}s"
            return False

    return _Ctx


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
