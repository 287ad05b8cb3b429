"""Removal-loss assembly and evaluation.

The expected loss of a (possibly relaxed) removal vector x in [-1,1]^n is
the quadratic x'Qx + 2x'b, where Q and b are built from the graph adjacency
and the maliciousness moments. The count-based loss gives the
human-readable companion: penalties per removed benign node, per cut
benign-benign edge, and per surviving malicious-to-benign edge.
"""

from dataclasses import dataclass

import numpy as np

from .moments import configuration_moments, sample_configuration_matrix


@dataclass(frozen=True)
class TradeoffWeights:
    """Nonnegative weights on the three loss terms; must sum to one."""

    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        if self.a1 < 0 or self.a2 < 0 or self.a3 < 0:
            raise ValueError("weights must be nonnegative")
        if abs(self.a1 + self.a2 + self.a3 - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    def as_array(self):
        return np.array([self.a1, self.a2, self.a3])


@dataclass(frozen=True)
class LossMatrices:
    """Quadratic-loss data (Q, b) plus the intermediate matrices B, P, M."""

    q: np.ndarray
    b: np.ndarray
    b_diag: np.ndarray  # matrix B = diag(E[pibar])
    p: np.ndarray
    m: np.ndarray

    @property
    def n(self):
        return self.b.size


def build_matrices(g, model, w):
    """Assemble B, P, M and the loss quadratic (Q, b) from graph and moments."""
    a = g.adjacency
    e_pibar, e_pibar_pibar, e_pi_pibar = configuration_moments(model)
    b_diag = np.diag(e_pibar)
    p = a * e_pibar_pibar
    m = a * e_pi_pibar
    q = 0.5 * w.a3 * (m + m.T) - 0.5 * w.a2 * (p + p.T)
    b = 0.5 * w.a1 * e_pibar
    return LossMatrices(q=q, b=b, b_diag=b_diag, p=p, m=m)


def expected_loss(x, lm):
    """Quadratic loss x'Qx + 2x'b at a removal vector with entries in [-1,1]."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (lm.n,):
        raise ValueError("x length does not match the loss matrices")
    if np.any(np.abs(x) > 1.0 + 1e-9):
        raise ValueError("x entries must lie in [-1, 1]")
    return float(x @ lm.q @ x + 2.0 * x @ lm.b)


def configuration_loss(x, pi, g, w):
    """Loss of removal vector x under one realized configuration."""
    x = np.asarray(x, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    a = g.adjacency
    pibar = 1.0 - pi
    l1 = float(x @ pibar)
    xa = x[:, None] * a * x[None, :]
    l2 = float(pibar @ xa @ pibar)
    l3 = float(pi @ xa @ pibar)
    return w.a1 * l1 - w.a2 * l2 + w.a3 * l3


def interpretable_loss(removed, cfg, g, w):
    """Count-based loss of a removal set against one configuration."""
    mask = np.zeros(g.n, dtype=bool)
    removed = list(removed)
    if removed:
        idx = np.asarray(removed, dtype=int)
        if idx.min() < 0 or idx.max() >= g.n:
            raise ValueError("removal set contains out-of-range nodes")
        mask[idx] = True
    benign = cfg.pi == 0
    iu, iv = g.edges()
    removed_benign = int(np.sum(mask & benign))
    both_benign = benign[iu] & benign[iv]
    cut = mask[iu] != mask[iv]
    benign_cut_edges = int(np.sum(both_benign & cut))
    kept = ~mask
    mal_benign = (
        (kept[iu] & kept[iv])
        & ((cfg.pi[iu] == 1) & benign[iv] | (cfg.pi[iv] == 1) & benign[iu])
    )
    surviving_mal_edges = int(np.sum(mal_benign))
    return w.a1 * removed_benign + w.a2 * benign_cut_edges + w.a3 * surviving_mal_edges


def monte_carlo_loss(x, model, g, w, samples, seed=0):
    """Sample-average of configuration_loss-style realized losses under the model."""
    if samples <= 0:
        raise ValueError("need a positive sample count")
    x = np.asarray(x, dtype=np.float64)
    pis = sample_configuration_matrix(model, samples, seed=seed)
    pibars = 1.0 - pis
    a = g.adjacency
    l1 = pibars @ x
    ax = a * np.outer(x, x)
    l2 = np.einsum("si,ij,sj->s", pibars, ax, pibars)
    l3 = np.einsum("si,ij,sj->s", pis, ax, pibars)
    vals = w.a1 * l1 - w.a2 * l2 + w.a3 * l3
    return float(vals.mean())
