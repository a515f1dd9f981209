import math
from collections import OrderedDict
from pathlib import Path

import numpy as np
import pytest

from cdrdereverb.io import load_scenario
from cdrdereverb.simulator import RoomSpec, linear_array, simulate_rirs

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

# criterion id -> (title, list of outcomes)
_CRITERIA: "OrderedDict[str, tuple[str, list[bool]]]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    cid, title = mark.args
    entry = _CRITERIA.setdefault(str(cid), (title, []))
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry[1].append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: int(c)):
        title, results = _CRITERIA[cid]
        ok = bool(results) and all(results)
        terminalreporter.write_line(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {title}  ({sum(results)}/{len(results)} checks)")


@pytest.fixture(scope="session")
def small_room_scenario():
    return load_scenario(SCENARIOS / "room_coherence_small.json")


@pytest.fixture(scope="session")
def speech_scenario():
    return load_scenario(SCENARIOS / "reverberant_speech.json")


def room_from_scenario(sc: dict, beta) -> RoomSpec:
    room = sc["room"]
    a = room["array"]
    mics = linear_array(a["center"], a["num_mics"], a["spacing"])
    return RoomSpec(room["dims"], beta, room["source"], mics, sc["sample_rate"], sc["c"])


@pytest.fixture(scope="session")
def speech_room_rirs(speech_scenario):
    """Two-microphone RIRs of the beta=0.9 small room."""
    room = room_from_scenario(speech_scenario, speech_scenario["room"]["beta"])
    rirs = simulate_rirs(room, te=speech_scenario["te"])
    d = np.linalg.norm(room.mics - room.source, axis=1)
    return rirs, float((d[1] - d[0]) / room.c)


@pytest.fixture(scope="session")
def small_rirs():
    """Short 2-mic RIR set for unit tests (fast, low reflectivity)."""
    room = RoomSpec([4.0, 3.0, 2.5], 0.6, [2.5, 2.2, 1.3], linear_array([2.0, 1.5, 1.25], 2), 16000)
    return room, simulate_rirs(room)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def unit_disk(rng, n):
    r = np.sqrt(rng.uniform(0, 1, n))
    phi = rng.uniform(-math.pi, math.pi, n)
    return r * np.exp(1j * phi)
