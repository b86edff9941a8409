import pytest

# acceptance lines collected by tests/test_acceptance.py, echoed in the summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def orbits_098():
    from chaoskit.dynsys import MemristiveSystem
    from chaoskit.orbits import find_upos
    return find_upos(MemristiveSystem(0.98), 4)


@pytest.fixture(scope="session")
def orbits_025507():
    from chaoskit.dynsys import MemristiveSystem
    from chaoskit.orbits import find_upos
    return find_upos(MemristiveSystem(0.25507), 4)


@pytest.fixture(scope="session")
def orbits_0985():
    from chaoskit.dynsys import MemristiveSystem
    from chaoskit.orbits import find_upos
    return find_upos(MemristiveSystem(0.985), 3)
