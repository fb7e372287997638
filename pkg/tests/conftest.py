import os
from dataclasses import replace

import numpy as np
import pytest

from blockgraph.graph import build_graph
from config import MODEL_PROFILES, RunConfig, TrainConfig
from molio import read_structure

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    monkeypatch.delenv("EPT_SEED", raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """Smallest model shape; training settings sized for a handful of steps."""
    return RunConfig(
        model=MODEL_PROFILES["tiny"],
        train=TrainConfig(lr=1e-3, min_lr=1e-4, epochs=1, sigma_t=0.1, sigma_r=0.3,
                          max_vertices=64, seed=7),
    )


@pytest.fixture
def desk_config():
    return RunConfig(model=MODEL_PROFILES["desk"])


@pytest.fixture
def ethanol():
    return build_graph(read_structure(fixture_path("ethanol.sdf")))


@pytest.fixture
def water():
    return build_graph(read_structure(fixture_path("water.xyz")))


@pytest.fixture
def methane():
    return build_graph(read_structure(fixture_path("methane.xyz")))


@pytest.fixture
def tripeptide():
    return build_graph(read_structure(fixture_path("tripeptide.pdb")))


@pytest.fixture
def toy_graphs(ethanol, water, methane, tripeptide):
    return [ethanol, water, methane, tripeptide]


def with_train(config, **changes):
    return replace(config, train=replace(config.train, **changes))
