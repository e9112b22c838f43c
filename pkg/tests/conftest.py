import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from common.channel import ChannelRealization  # noqa: E402
from common.channel import SnrConfig  # noqa: E402

SEED = 7


@pytest.fixture
def seed():
    return SEED


@pytest.fixture
def example_realization():
    return ChannelRealization.from_power_gains([[0.9, 0.2], [0.5, 0.6]])


@pytest.fixture
def snr_10db_two_relays():
    return SnrConfig.from_db(10.0, 2)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setattr("common.filesystem.TWRC_OUTPUT_DIR", str(tmp_path / "output"))
    return tmp_path / "output"
