import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from verbseq.corpus import load_bundled  # noqa: E402
from verbseq.synth import default_paper_spec, generate_corpus  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def example_corpus():
    return load_bundled("paper_example.csv")


@pytest.fixture(scope="session")
def sample_corpus():
    return load_bundled("sample_corpus.csv")


@pytest.fixture(scope="session")
def synthetic():
    """A default-spec synthetic corpus with its ground truth."""
    return generate_corpus(default_paper_spec(), 100, 0)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
