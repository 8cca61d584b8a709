import pytest

from parp import LesionTaxonomy, RegionVocabulary


@pytest.fixture(scope="session")
def taxonomy():
    return LesionTaxonomy.default()


@pytest.fixture(scope="session")
def vocab():
    return RegionVocabulary.default()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
