import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

_LINES: list[str] = []


class Reporter:
    def __init__(self, label: str):
        self.label = label
        self.parts: list[tuple[str, bool]] = []

    def check(self, description: str, ok) -> bool:
        self.parts.append((description, bool(ok)))
        return bool(ok)

    def finish(self):
        ok = all(p for _, p in self.parts) and bool(self.parts)
        failed = [d for d, p in self.parts if not p]
        detail = "; ".join(failed) if failed else f"{len(self.parts)} checks"
        line = f"{'PASS' if ok else 'FAIL'} {self.label}: {detail}"
        _LINES.append(line)
        print(line)
        assert ok, line


@pytest.fixture
def report(request):
    return Reporter(request.node.name.removeprefix("test_"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion_")[1].split("_")[0]) if "criterion_" in s else 0):
            terminalreporter.write_line(line)
