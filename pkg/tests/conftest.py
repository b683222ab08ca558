"""Shared fixtures: the six-agent consensus scenario and its analysis
products, computed once per session."""

import numpy as np
import pytest

from lpvnet import pipeline
from lpvnet.config import config_from_dict, consensus_example


@pytest.fixture(scope="session")
def cfg():
    return config_from_dict(consensus_example())


@pytest.fixture(scope="session")
def p_pair(cfg):
    return cfg.plant.pattern.p1, cfg.plant.pattern.p2


@pytest.fixture(scope="session")
def analysis(cfg):
    return pipeline.analyze(cfg)


@pytest.fixture(scope="session")
def modal_family(analysis):
    return analysis[0]


@pytest.fixture(scope="session")
def lpv(analysis):
    return analysis[1]


@pytest.fixture(scope="session")
def loops(cfg, lpv):
    return pipeline.certify_loops(cfg, lpv)


@pytest.fixture(scope="session")
def bound(cfg, lpv, loops):
    return pipeline.compute_bound(cfg, lpv, loops)


def rand_sym(rng, n, scale=1.0):
    w = rng.standard_normal((n, n)) * scale
    return 0.5 * (w + w.T)
