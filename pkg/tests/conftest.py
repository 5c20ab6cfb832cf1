from importlib.resources import files
from pathlib import Path

import pytest

from amdn.pddl import parse_domain
from amdn.traces import read_traces

DATA = Path(__file__).parent / "data"


def bundled(name: str) -> str:
    return (files("amdn") / "data" / f"{name}.pddl").read_text()


@pytest.fixture(scope="session")
def blocks():
    return parse_domain(bundled("blocks"))


@pytest.fixture(scope="session")
def depots():
    return parse_domain(bundled("depots"))


@pytest.fixture(scope="session")
def driverlog():
    return parse_domain(bundled("driverlog"))


@pytest.fixture(scope="session")
def depots_pair(depots):
    return read_traces((DATA / "depots_pair.sexp").read_text(), depots)
