import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from reference_models import (  # noqa: E402
    erlang2_model,
    m1,
    m2,
    m3,
    m4,
    mrme_model,
)


@pytest.fixture
def M1():
    return m1()


@pytest.fixture
def M2():
    return m2()


@pytest.fixture
def M3():
    return m3()


@pytest.fixture
def M4():
    return m4()


@pytest.fixture
def erlang():
    return erlang2_model()


@pytest.fixture
def mrme():
    return mrme_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> (title, passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        detail = " ".join(detail.split())
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  {detail}")
