"""Turning relaxed solutions into removal decisions and scoring them."""

from dataclasses import dataclass

import numpy as np

from .eigen import jacobi_eigen
from .loss import build_matrices, expected_loss, interpretable_loss
from .moments import Configuration, sample_configuration_matrix
from .robust import inner_worst_case


@dataclass(frozen=True)
class RemovalDecision:
    """Relaxed vector, its binary rounding, and the induced removal set."""

    x_relaxed: np.ndarray
    x_binary: np.ndarray
    removed_set: frozenset
    method: str
    objective_relaxed: float

    def __post_init__(self):
        xb = np.asarray(self.x_binary, dtype=np.float64)
        if not np.all(np.abs(xb) == 1.0):
            raise ValueError("binary vector entries must be -1 or +1")
        removed = frozenset(int(i) for i in np.flatnonzero(xb > 0))
        if removed != self.removed_set:
            raise ValueError("removed_set does not match the binary vector")


def make_decision(x_relaxed, x_binary, method, objective_relaxed):
    return RemovalDecision(
        x_relaxed=np.asarray(x_relaxed, dtype=np.float64),
        x_binary=np.asarray(x_binary, dtype=np.float64),
        removed_set=frozenset(int(i) for i in np.flatnonzero(np.asarray(x_binary) > 0)),
        method=method,
        objective_relaxed=float(objective_relaxed),
    )


def round_sign(x_relaxed):
    """Sign rounding; exact zeros map to keep (-1)."""
    x = np.asarray(x_relaxed, dtype=np.float64)
    return np.where(x > 0, 1.0, -1.0)


def round_randomized(x_relaxed, x_mat, trials, score, seed=0):
    """Best of `trials` hyperplane roundings of the lifted block plus plain
    sign rounding, under the supplied score (lower is better)."""
    x = np.asarray(x_relaxed, dtype=np.float64)
    n = x.size
    candidates = [round_sign(x)]
    if trials > 0:
        lifted = np.zeros((n + 1, n + 1))
        lifted[:n, :n] = np.asarray(x_mat, dtype=np.float64)
        lifted[:n, n] = x
        lifted[n, :n] = x
        lifted[n, n] = 1.0
        vals, vecs = jacobi_eigen(lifted)
        if vals[-1] < -1e-4 * (1.0 + abs(vals[0])):
            raise ValueError("lifted block is too far from PSD to factor")
        gram = vecs * np.sqrt(np.maximum(vals, 0.0))
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            direction = rng.standard_normal(n + 1)
            raw = gram @ direction
            anchor = raw[n] if raw[n] != 0 else 1.0
            candidates.append(round_sign(raw[:n] * anchor))
    best = candidates[0]
    best_score = score(best)
    for cand in candidates[1:]:
        val = score(cand)
        if val < best_score:
            best = cand
            best_score = val
    return best


@dataclass(frozen=True)
class EvaluationReport:
    expected_loss_eval: float
    interpretable_mean: float
    interpretable_stderr: float
    samples: int


def evaluate(decision, eval_model, g, w, samples=1000, seed=0):
    """Score a decision under an evaluation model: exact quadratic loss plus
    a sampled mean of the count-based loss."""
    lm = build_matrices(g, eval_model, w)
    exp_loss = expected_loss(decision.x_binary, lm)
    pis = sample_configuration_matrix(eval_model, samples, seed=seed)
    removed = sorted(decision.removed_set)
    vals = np.empty(samples)
    for s in range(samples):
        vals[s] = interpretable_loss(removed, Configuration(pi=pis[s]), g, w)
    stderr = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return EvaluationReport(
        expected_loss_eval=exp_loss,
        interpretable_mean=float(vals.mean()),
        interpretable_stderr=stderr,
        samples=samples,
    )


def _sign_vectors(n, chunk=None):
    """All vectors in {-1, +1}^n, optionally in chunks along axis 0."""
    total = 1 << n
    if chunk is None:
        chunk = total
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = (codes[:, None] >> shifts) & 1
        yield 2.0 * bits.astype(np.float64) - 1.0


def brute_force_binary(g, model, w, n_max=20):
    """Exhaustive minimum of the quadratic loss over binary removal vectors."""
    n = g.n
    if n > n_max:
        raise ValueError(f"brute force capped at {n_max} nodes")
    lm = build_matrices(g, model, w)
    best_x = None
    best_val = np.inf
    for xs in _sign_vectors(n, chunk=1 << 16):
        vals = np.einsum("ki,ij,kj->k", xs, lm.q, xs) + 2.0 * xs @ lm.b
        idx = int(np.argmin(vals))
        if vals[idx] < best_val:
            best_val = float(vals[idx])
            best_x = xs[idx].copy()
    return best_x, best_val


def brute_force_robust(
    g, model, w, amb, options=None, n_max=12, refine_options=None, refine_top=8
):
    """Exhaustive minimum over binary x of the dual worst-case bound.

    With refine_options set, a first pass scores every candidate at the loose
    tolerance and only the refine_top best are re-solved at the tight one.
    """
    n = g.n
    if n > n_max:
        raise ValueError(f"robust brute force capped at {n_max} nodes")
    scored = []
    for xs in _sign_vectors(n):
        for row in xs:
            inner = inner_worst_case(g, row, model, w, amb, options=options)
            scored.append((inner.value, row.copy()))
    if refine_options is None:
        best_val, best_x = min(scored, key=lambda pair: pair[0])
        return best_x, best_val
    scored.sort(key=lambda pair: pair[0])
    best_x = None
    best_val = np.inf
    for _, row in scored[:refine_top]:
        inner = inner_worst_case(g, row, model, w, amb, options=refine_options)
        if inner.value < best_val:
            best_val = inner.value
            best_x = row.copy()
    return best_x, best_val
