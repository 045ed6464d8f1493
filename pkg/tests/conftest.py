import pathlib

import pytest

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def corpus_dir() -> pathlib.Path:
    return REPO_ROOT / "corpus"
