import os
from pathlib import Path

import numpy as np
import pytest

from gcsel import Dataset, ingest_csv

BOSTON_NAMES = ["crim", "zn", "indus", "chas", "nox", "rm", "age", "dis", "rad", "tax", "ptratio", "black", "lstat"]


def _boston_frame():
    try:
        from pydataset import data
    except ImportError:
        return None
    try:
        return data("Boston")
    except Exception:
        return None


@pytest.fixture(scope="session")
def boston():
    """Boston housing with covariates labelled 1..13 as in the published tables."""
    frame = _boston_frame()
    if frame is None:
        pytest.skip("Boston housing data not available (install pydataset)")
    x = frame[BOSTON_NAMES].to_numpy(dtype=float)
    y = frame["medv"].to_numpy(dtype=float)
    return Dataset(np.asfortranarray(x), y, names=[str(i) for i in range(1, 14)])


@pytest.fixture(scope="session")
def boston_csv(tmp_path_factory):
    frame = _boston_frame()
    if frame is None:
        pytest.skip("Boston housing data not available (install pydataset)")
    path = tmp_path_factory.mktemp("data") / "boston.csv"
    frame.to_csv(path, index=False)
    return path


def wine_path():
    root = os.environ.get("GCSEL_DATA_DIR")
    if not root:
        return None
    path = Path(root) / "winequality-red.csv"
    return path if path.exists() else None


@pytest.fixture(scope="session")
def wine():
    path = wine_path()
    if path is None:
        pytest.skip("set GCSEL_DATA_DIR to a directory holding winequality-red.csv")
    return ingest_csv(path, delimiter=";")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


# acceptance verdicts, printed once at the end of the session
VERDICTS = {}


def record_verdict(number, passed, detail):
    line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    VERDICTS[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
