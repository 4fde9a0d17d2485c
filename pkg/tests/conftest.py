from functools import lru_cache
from pathlib import Path

import pytest

from parafrac.config import build, bundled_config_dir, load_config
from parafrac.maps1d import Affine, MPInverseBranch
from parafrac.measure import BernoulliMeasure
from parafrac.system import CantorSystem, CarpetSystem

DATA = Path(__file__).parent / "data"
CONFIGS = bundled_config_dir()


@lru_cache(maxsize=None)
def bundled(name):
    return build(load_config(CONFIGS / f"{name}.json"))


@pytest.fixture(scope="session")
def middle_third():
    return CantorSystem((Affine(1 / 3, 0.0), Affine(1 / 3, 2 / 3)), name="middle_third")


@pytest.fixture(scope="session")
def dyadic():
    return CantorSystem((Affine(0.5, 0.0), Affine(0.5, 0.5)), name="dyadic")


@pytest.fixture(scope="session")
def mp09():
    return CantorSystem((MPInverseBranch(0.9, "left"), MPInverseBranch(0.9, "right")), name="mp09")


@pytest.fixture(scope="session")
def mp05():
    return CantorSystem((MPInverseBranch(0.5, "left"), MPInverseBranch(0.5, "right")), name="mp05")


@pytest.fixture(scope="session")
def bedford_mcmullen():
    cols = tuple(Affine(1 / 3, c / 3) for c in range(3))
    rows = tuple(Affine(1 / 2, r / 2) for r in range(2))
    return CarpetSystem(cols, rows, ((0, 0), (2, 0), (1, 1), (2, 1)), name="bm")


@pytest.fixture(scope="session")
def fig1_left():
    return bundled("fig1_left")


@pytest.fixture(scope="session")
def half():
    return BernoulliMeasure((0.5, 0.5))


@pytest.fixture(scope="session")
def quarter():
    return BernoulliMeasure.uniform(4)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
