import random
from pathlib import Path

import pytest

from talkedit.core import TABLE_CODES, PhoneSequence
from talkedit.ingest import parse_alignment, parse_dictionary, write_track
from talkedit.synth import synth_track

CODES = sorted(TABLE_CODES)


def random_sequence(rng: random.Random, n: int, codes=CODES, lo=0.02, hi=0.5) -> PhoneSequence:
    return PhoneSequence.contiguous([rng.choice(codes) for _ in range(n)], [rng.uniform(lo, hi) for _ in range(n)])


@pytest.fixture
def rng():
    return random.Random(1234)


FIXTURES = Path(__file__).parent / "fixtures"
FIXTURE_FPS = 60.0
FIXTURE_TRACK_SEED = 11


def load_fixture():
    """The bundled 20-sentence corpus: (transcript, dictionary, 60 fps track)."""
    tr = parse_alignment(FIXTURES / "alignment.json")
    pron = parse_dictionary(FIXTURES / "dict.txt")
    return tr, pron, synth_track(tr, FIXTURE_FPS, seed=FIXTURE_TRACK_SEED)


@pytest.fixture(scope="session")
def corpus():
    return load_fixture()


@pytest.fixture(scope="session")
def fixture_track_path(tmp_path_factory, corpus):
    path = tmp_path_factory.mktemp("track") / "track.vftk"
    write_track(corpus[2], path)
    return path


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("[", 1)[1].split("]", 1)[0])):
            terminalreporter.write_line(line)
