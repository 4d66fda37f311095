import contextlib

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

# acceptance criterion number -> (title, list of (check, passed, detail))
_ACCEPTANCE: dict[int, tuple[str, list]] = {}


@pytest.fixture
def beta_1e4():
    from oracles import BETA_1E4
    return BETA_1E4


@pytest.fixture
def criterion(request):
    """Context manager recording one check of a numbered acceptance criterion."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        checks = _ACCEPTANCE.setdefault(number, (title, []))[1]
        try:
            yield
        except BaseException as exc:
            detail = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
            checks.append((request.node.name, False, detail))
            print(f"FAIL  criterion {number}: {title} [{request.node.name}] {detail}")
            raise
        checks.append((request.node.name, True, ""))
        print(f"PASS  criterion {number}: {title} [{request.node.name}]")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, checks = _ACCEPTANCE[number]
        failed = [c for c in checks if not c[1]]
        status = "FAIL" if failed else "PASS"
        line = f"{status}  {number}. {title} ({len(checks) - len(failed)}/{len(checks)} checks)"
        for name, _, detail in failed:
            line += f"\n        {name}: {detail}"
        terminalreporter.write_line(line)
