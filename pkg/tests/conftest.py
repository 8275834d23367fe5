import pytest

from sunada_lab.fixtures import write_scenarios


@pytest.fixture(scope="session")
def scenario_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenarios")
    write_scenarios(root)
    return root


@pytest.fixture(scope="session")
def fano_path(scenario_dir):
    return scenario_dir / "fano" / "scenario.json"


@pytest.fixture(scope="session")
def brooks_path(scenario_dir):
    return scenario_dir / "brooks" / "scenario.json"


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    lines = [RESULTS[n] for n in range(1, 11) if isinstance(RESULTS.get(n), str)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
