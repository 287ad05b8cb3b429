"""Shared helpers: random instances and enumeration oracles."""

import numpy as np
import pytest

from netprune.graphs import Graph
from netprune.loss import TradeoffWeights
from netprune.moments import MomentModel, bernoulli_sigma


def random_graph(rng, n, p=0.4):
    adj = (rng.random((n, n)) < p).astype(np.float64)
    adj = np.triu(adj, k=1)
    adj = adj + adj.T
    return Graph(adj)


def random_model(rng, n, lo=0.05, hi=0.95, kind="estimated"):
    mu = rng.uniform(lo, hi, n)
    return MomentModel(mu, bernoulli_sigma(mu), kind=kind)


def random_weights(rng):
    raw = rng.uniform(0.1, 1.0, 3)
    raw = raw / raw.sum()
    # renormalize exactly so the simplex invariant holds to 1e-12
    return TradeoffWeights(raw[0], raw[1], 1.0 - raw[0] - raw[1])


def all_configurations(n):
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.float64)


def config_probabilities(mu, configs):
    """Independent-Bernoulli probability of each configuration row."""
    logs = configs @ np.log(mu) + (1.0 - configs) @ np.log1p(-mu)
    return np.exp(logs)


def enumeration_loss(x, mu, adjacency, w):
    """Expected loss by exhaustive enumeration of all configurations."""
    n = mu.size
    configs = all_configurations(n)
    probs = config_probabilities(mu, configs)
    pibar = 1.0 - configs
    ax = adjacency * np.outer(x, x)
    l1 = pibar @ x
    l2 = np.einsum("si,ij,sj->s", pibar, ax, pibar)
    l3 = np.einsum("si,ij,sj->s", configs, ax, pibar)
    vals = w.a1 * l1 - w.a2 * l2 + w.a3 * l3
    return float(probs @ vals)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
