import sys
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"
DATASET = DATA / "breast-cancer-wisconsin.data"


def synthetic_images(size=64, seed=0):
    """Gradient, checkerboard and uniform-noise test images."""
    rng = np.random.default_rng(seed)
    cols = np.arange(size)
    gradient = np.tile(np.round(cols * 255 / (size - 1)), (size, 1)).astype(np.uint8)
    checker = ((np.indices((size, size)).sum(axis=0) % 2) * 255).astype(np.uint8)
    noise = rng.integers(0, 256, (size, size)).astype(np.uint8)
    return {"gradient": gradient, "checkerboard": checker, "noise": noise}


@pytest.fixture(scope="session")
def dataset():
    from neuromem.network import load_dataset

    return load_dataset(DATASET, seed=0)


@pytest.fixture(scope="session")
def trained(dataset):
    """A float network trained once per session and its bridge-mode twin."""
    from neuromem import network

    net, history = network.fit(network.init_network(seed=0), dataset, epochs=800, lr=0.1, seed=0)
    return net, network.quantize_network(net), history


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
