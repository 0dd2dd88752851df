"""Shared fixtures: desk-scale dataset files produced by the simulator CLI.

The simulator is only touched through its external surfaces (the ``gen`` and
``score`` commands plus the documented file formats); nothing imports it.
"""

import subprocess
import sys

import pytest

GEN = [sys.executable, "-m", "risfaultsim.cli"]

# one physical channel shared by the paired detection datasets
CHANNEL_SEED = "999"


def run_cli(*args) -> subprocess.CompletedProcess:
    proc = subprocess.run([*GEN, *args], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("datasets")


@pytest.fixture(scope="session")
def sa_detection_file(data_dir):
    """Full-panel detection dataset: 6x6 panel, 4 SAs, fixed channel, 30 dB."""
    out = data_dir / "det_sa"
    run_cli(
        "gen", "detect", "--count", "2000", "--max-faulty", "6",
        "--ris", "6x6", "--bs", "4x4", "--sa", "4", "--paths", "6", "6",
        "--snr", "30", "--fixed-channel", "--channel-seed", CHANNEL_SEED,
        "--seed", "101", "--out", str(out),
    )
    return data_dir / "det_sa.bin"


@pytest.fixture(scope="session")
def isolation_file(data_dir):
    """Single-SA probing dataset over the same physical channel."""
    out = data_dir / "det_iso"
    run_cli(
        "gen", "detect", "--count", "2000", "--max-faulty", "6",
        "--ris", "6x6", "--bs", "4x4", "--sa", "4", "--paths", "6", "6",
        "--snr", "30", "--fixed-channel", "--channel-seed", CHANNEL_SEED,
        "--isolation", "--seed", "102", "--out", str(out),
    )
    return data_dir / "det_iso.bin"


@pytest.fixture(scope="session")
def localization_file(data_dir):
    """Localization dataset: 6x6 panel, line-of-sight user link, 15 dB.

    The panel-receiver link is held fixed (static endpoints) and the
    geometric path carries free-space-style distance decay so the signals
    actually encode position.
    """
    out = data_dir / "loc"
    run_cli(
        "gen", "loc", "--count", "2500", "--max-faulty", "6",
        "--ris", "6x6", "--bs", "4x4", "--sa", "4", "--paths", "1", "2",
        "--snr", "15", "--fixed-ris-bs-link", "--channel-seed", CHANNEL_SEED,
        "--anchor-gain", "geometric", "--anchor-ref-distance", "16",
        "--seed", "103", "--out", str(out),
    )
    return data_dir / "loc.bin"
