import pytest

from migr.classifier import Lexicon, load_lexicon
from migr.taxonomy import load_taxonomy
from migr.trace import TokenConfig

# Ten keywords over the seven DFEW labels, used wherever a test needs to know
# every keyword's label by construction.
SMALL_LEXICON = {
    "smiling": "happy", "laughing": "happy",
    "sobbing": "sad", "crying": "sad",
    "expressionless": "neutral",
    "frowning": "angry", "shouting": "angry",
    "widened eyes": "surprise",
    "grimacing": "disgust",
    "trembling": "fear",
}


@pytest.fixture(scope="session")
def dfew():
    return load_taxonomy("dfew")


@pytest.fixture(scope="session")
def lexicon(dfew):
    return load_lexicon(None, dfew)


@pytest.fixture(scope="session")
def small_lexicon(dfew):
    return Lexicon.from_dict({"taxonomy": "dfew", "entries": SMALL_LEXICON}, dfew)


@pytest.fixture(scope="session")
def tokens():
    return TokenConfig.default()


@pytest.fixture
def label(dfew):
    return dfew.label


# One line per acceptance criterion, echoed again at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
