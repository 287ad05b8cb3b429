"""Moment models of node maliciousness: mean vector and covariance matrix.

Models are manufactured three ways: simulated per-node probabilities,
Gaussian perturbation of an existing model (estimation error), or a CSV of
externally produced probabilities. All factories clip probabilities away
from {0, 1} and regularize the covariance so its inverse exists downstream.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

EPS_PROB = 1e-4  # probability clipping keeps Bernoulli variances positive
EPS_PD = 1e-6  # diagonal regularization added to every factory covariance

KIND_ESTIMATED = "estimated"
KIND_EVALUATION = "evaluation"


@dataclass(frozen=True)
class MomentModel:
    """Mean/covariance pair over node maliciousness, tagged by its role."""

    mu: np.ndarray
    sigma: np.ndarray
    kind: str = KIND_ESTIMATED

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if mu.ndim != 1:
            raise ValueError("mu must be a vector")
        if sigma.shape != (mu.size, mu.size):
            raise ValueError("sigma shape must match mu")
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mu entries must lie in [0, 1]")
        scale = max(1.0, float(np.abs(sigma).max()) if sigma.size else 0.0)
        if float(np.abs(sigma - sigma.T).max()) > 1e-10 * scale:
            raise ValueError("sigma must be symmetric")
        if self.kind not in (KIND_ESTIMATED, KIND_EVALUATION):
            raise ValueError("kind must be 'estimated' or 'evaluation'")
        mu = mu.copy()
        sigma = 0.5 * (sigma + sigma.T)
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self):
        return self.mu.size

    def sigma_is_diagonal(self):
        off = self.sigma - np.diag(np.diag(self.sigma))
        return float(np.abs(off).max()) == 0.0 if off.size else True


@dataclass(frozen=True)
class Configuration:
    """Binary maliciousness labeling of every node (1 = malicious)."""

    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        if not np.all((pi == 0) | (pi == 1)):
            raise ValueError("configuration entries must be 0 or 1")
        pi = pi.copy()
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def pi_bar(self):
        return 1.0 - self.pi


def bernoulli_sigma(mu):
    """Independent-Bernoulli diagonal covariance plus PD regularization."""
    mu = np.asarray(mu, dtype=np.float64)
    return np.diag(mu * (1.0 - mu)) + EPS_PD * np.eye(mu.size)


def simulate_moments(
    g,
    malicious_set,
    benign_beta=(2.0, 8.0),
    malicious_beta=(8.0, 2.0),
    seed=0,
    kind=KIND_EVALUATION,
):
    """Per-node maliciousness probabilities drawn from two beta distributions."""
    for a, b in (benign_beta, malicious_beta):
        if a <= 0 or b <= 0:
            raise ValueError("beta parameters must be positive")
    malicious = set(malicious_set)
    if malicious and (min(malicious) < 0 or max(malicious) >= g.n):
        raise ValueError("malicious set contains out-of-range nodes")
    rng = np.random.default_rng(seed)
    mu = np.empty(g.n)
    for i in range(g.n):
        a, b = malicious_beta if i in malicious else benign_beta
        mu[i] = rng.beta(a, b)
    mu = np.clip(mu, EPS_PROB, 1.0 - EPS_PROB)
    return MomentModel(mu=mu, sigma=bernoulli_sigma(mu), kind=kind)


def perturb(model, noise_std, seed=0, kind=KIND_ESTIMATED):
    """Add i.i.d. Gaussian noise to the mean and rebuild the covariance."""
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    mu = model.mu.copy()
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        mu = mu + rng.normal(0.0, noise_std, size=model.n)
    mu = np.clip(mu, EPS_PROB, 1.0 - EPS_PROB)
    return MomentModel(mu=mu, sigma=bernoulli_sigma(mu), kind=kind)


def configuration_moments(model):
    """First and second configuration moments (E[pibar], E[pibar pibar^T], E[pi pibar^T])."""
    mu = model.mu
    sigma = model.sigma
    n = model.n
    ones = np.ones((n, n))
    outer = np.outer(mu, mu)
    e_pibar = 1.0 - mu
    e_pibar_pibar = ones - np.outer(np.ones(n), mu) - np.outer(mu, np.ones(n)) + sigma + outer
    e_pi_pibar = np.outer(mu, np.ones(n)) - sigma - outer
    return e_pibar, e_pibar_pibar, e_pi_pibar


def sample_configuration(model, seed=0):
    """Draw one configuration treating nodes as independent Bernoulli(mu)."""
    rng = np.random.default_rng(seed)
    pi = (rng.random(model.n) < model.mu).astype(np.float64)
    return Configuration(pi=pi)


def sample_configuration_matrix(model, samples, seed=0):
    """Stack of `samples` independent-Bernoulli configurations, one per row."""
    if samples <= 0:
        raise ValueError("need a positive sample count")
    rng = np.random.default_rng(seed)
    return (rng.random((samples, model.n)) < model.mu).astype(np.float64)


def load_probability_csv(source, g):
    """Read `node,p_est,p_eval` rows into an estimated and an evaluation model.

    Node identifiers must match the graph's labels (or the stringified node
    index when the graph carries no labels); every node must appear once.
    """
    if isinstance(source, str) and "\n" not in source:
        with open(source, "r", encoding="utf-8") as fh:
            return load_probability_csv(fh.read(), g)
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader(source)
    required = {"node", "p_est", "p_eval"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ValueError("probability CSV must have header node,p_est,p_eval")
    labels = g.labels if g.labels is not None else tuple(str(i) for i in range(g.n))
    index = {label: i for i, label in enumerate(labels)}
    p_est = np.full(g.n, np.nan)
    p_eval = np.full(g.n, np.nan)
    for row in reader:
        node = row["node"]
        if node not in index:
            raise ValueError(f"unknown node identifier {node!r}")
        i = index[node]
        if not np.isnan(p_est[i]):
            raise ValueError(f"duplicate row for node {node!r}")
        p_est[i] = float(row["p_est"])
        p_eval[i] = float(row["p_eval"])
    if np.any(np.isnan(p_est)):
        missing = [labels[i] for i in np.flatnonzero(np.isnan(p_est))]
        raise ValueError(f"missing probabilities for nodes: {missing[:5]}")
    p_est = np.clip(p_est, EPS_PROB, 1.0 - EPS_PROB)
    p_eval = np.clip(p_eval, EPS_PROB, 1.0 - EPS_PROB)
    est = MomentModel(p_est, bernoulli_sigma(p_est), kind=KIND_ESTIMATED)
    ev = MomentModel(p_eval, bernoulli_sigma(p_eval), kind=KIND_EVALUATION)
    return est, ev
