import os
import pathlib

import pytest

DATA = pathlib.Path(os.environ.get("LEVYDETECT_TEST_DATA", pathlib.Path(__file__).parents[1] / "data"))


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def cli():
    path = os.environ.get("LEVYDETECT_CLI")
    if not path or not pathlib.Path(path).exists():
        pytest.skip("command-line tool not built")
    return path
