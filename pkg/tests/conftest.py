import os

import pytest

from gazerace.classifier import CalibrationProfile
from gazerace.config import SessionConfig
from gazerace.sim import load_track
from gazerace.wire import replay

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


@pytest.fixture(scope="session")
def demo_config() -> SessionConfig:
    return SessionConfig.load(data_path("demo_config.json"))


@pytest.fixture(scope="session")
def demo_profile(demo_config) -> CalibrationProfile:
    with open(demo_config.profile_path, "r", encoding="utf-8") as f:
        return CalibrationProfile.from_json(f.read())


@pytest.fixture(scope="session")
def demo_recording_path() -> str:
    return data_path("demo_recording.jsonl")


@pytest.fixture(scope="session")
def demo_frames(demo_recording_path):
    return list(replay(demo_recording_path))


@pytest.fixture(scope="session")
def default_track():
    return load_track()
