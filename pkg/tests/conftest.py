import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for `oracles`

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def fixture_path(name: str) -> str:
    return os.path.abspath(os.path.join(FIXTURE_DIR, name))


@pytest.fixture(scope="session")
def demo_layout():
    from sara.layout import parse_layout

    with open(fixture_path("layout_demo.json"), "rb") as fh:
        return parse_layout(fh.read())


@pytest.fixture(scope="session")
def demo_layout_doc():
    with open(fixture_path("layout_demo.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def grid_layout():
    from sara.sim import make_grid_layout

    return make_grid_layout()


def load_fixture_config(name: str, tmp_path, log_name="session.log.jsonl"):
    """Session config for a fixture recording, with the log redirected
    into the test's tmp dir."""
    from sara.session import load_session_config

    cfg = load_session_config(fixture_path(name))
    from dataclasses import replace

    return replace(cfg, log_path=str(tmp_path / log_name))
