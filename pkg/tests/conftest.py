import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from calx.oracle import FiniteDomain
from calx.solver import Checker

REPO = Path(__file__).resolve().parents[1]
SCRIPTS = REPO / "scripts"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def checker():
    return Checker(domain=FiniteDomain(lo=0, hi=5))


@pytest.fixture
def small_checker():
    return Checker(domain=FiniteDomain(lo=0, hi=3))


def run_script_session(script_name: str):
    """Replay a checked-in derivation script into a fresh session."""
    import io

    from calx.cli import run_script
    from calx.session import Session

    session = Session(domain=FiniteDomain(lo=0, hi=5))
    out = io.StringIO()
    code = run_script(session, str(SCRIPTS / script_name), out=out)
    assert code == 0, out.getvalue()
    return session


@pytest.fixture(scope="session")
def s2_session():
    return run_script_session("s2-derivation.calx")


@pytest.fixture(scope="session")
def intdiv_session():
    return run_script_session("intdiv-derivation.calx")
