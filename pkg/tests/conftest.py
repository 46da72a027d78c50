import numpy as np
import pytest

from wavedepth.experiments import render_split
from wavedepth.synthdata import SceneParams, split_seeds

# one line per acceptance criterion, printed in the terminal summary
CRITERIA = {}


def record(number, passed, detail):
    CRITERIA[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tiny_data():
    """16 training scenes at the default side (64), rendered once per session."""
    train, _ = split_seeds(7, 16, 1)
    return render_split(SceneParams(blur_sigma=1.0), train)


@pytest.fixture(scope="session")
def train_val_64():
    tr, va = split_seeds(11, 64, 8)
    scene = SceneParams(blur_sigma=1.0)
    return render_split(scene, tr), render_split(scene, va)
