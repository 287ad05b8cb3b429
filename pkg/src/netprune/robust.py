"""Robust removal machinery: ambiguity set, calibration, and SDP assembly.

The worst-case inner maximization over a moment ambiguity set dualizes into
scalar t and PSD matrix K; the remaining infinite-dimensional constraint
(a quadratic in the uncertain mean must be nonpositive on a support
ellipsoid) collapses to one linear matrix inequality with multiplier lam.
Lifting x to X = xx^T through a Schur-complement block turns the whole
problem into a semidefinite program over (x, X, t, K, lam).

The LMI is assembled in whitened coordinates nu = S^-1 (mu - mu_hat) with
S = sigma^(1/2): a congruence transform of the textbook block, so the
constraint is unchanged while the ellipsoid side becomes diag(1,...,1,-g1)
and the data stays well scaled for the first-order solver.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import conic
from .conic import packed_index, packed_length, pack_symmetric

logger = logging.getLogger(__name__)

METHOD_MINT = "mint"
METHOD_MINT_DRO = "mint_dro"


# ---------------------------------------------------------------------------
# Ambiguity set and calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmbiguityParams:
    """Moment ambiguity set radii around a center model (gamma1: mean
    ellipsoid in the sigma^-1 norm, gamma2: covariance cap)."""

    gamma1: float
    gamma2: float
    center: object  # MomentModel

    def __post_init__(self):
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ValueError("gamma1 and gamma2 must be strictly positive")
        try:
            np.linalg.cholesky(self.center.sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("center covariance must be positive definite") from exc


@dataclass(frozen=True)
class CalibrationInput:
    """Sample-based inputs for choosing the ambiguity radii."""

    n: int
    m_samples: int
    r2: float  # squared support radius
    delta1: float
    delta2: float

    def __post_init__(self):
        if self.m_samples < 1:
            raise ValueError("need at least one sample")
        if self.r2 <= 0:
            raise ValueError("squared support radius must be positive")
        for d in (self.delta1, self.delta2):
            if not 0.0 < d < 1.0:
                raise ValueError("failure probabilities must lie in (0, 1)")


def calibrate_gamma1(cal):
    """Concentration bound beta(delta1); gamma1 must exceed it."""
    return (cal.r2 / cal.m_samples) * (2.0 + math.sqrt(2.0 * math.log(1.0 / cal.delta1))) ** 2


@dataclass(frozen=True)
class Gamma2Bound:
    value: float  # gamma2 must exceed this when valid
    valid: bool


def calibrate_gamma2(cal):
    """Covariance-cap bound 1/(1 - alpha(delta2)) with its validity flag.

    Invalid when r2^2 < n (imaginary square root) or alpha >= 1; the latter
    is equivalent to the sample-size requirement failing.
    """
    r4 = cal.r2**2
    inner = max(0.0, 1.0 - cal.n / r4)
    s = math.sqrt(inner) + math.sqrt(math.log(1.0 / cal.delta2))
    alpha = (cal.r2 / math.sqrt(cal.m_samples)) * s
    valid = r4 >= cal.n and alpha < 1.0
    value = 1.0 / (1.0 - alpha) if alpha < 1.0 else math.inf
    return Gamma2Bound(value=value, valid=valid)


def failure_probability(delta1, delta2):
    """Union-bound failure probability, capped at 1."""
    total = delta1 + delta2
    if total > 1.0:
        logger.warning("combined failure probability %.3f exceeds 1; clipping", total)
        return 1.0
    return total


# ---------------------------------------------------------------------------
# Quadratic-in-mean reformulation and lifted coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticInMu:
    """Coefficients of f(mu) = mu'R mu + mu'r + z for fixed (x, t, K)."""

    r_mat: np.ndarray
    r_vec: np.ndarray
    z: float

    def evaluate(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        return float(mu @ self.r_mat @ mu + mu @ self.r_vec + self.z)


def quadratic_in_mu(g, x, model, w, t, k_mat):
    """Rewrite the loss-minus-dual expression as a quadratic in the mean."""
    x = np.asarray(x, dtype=np.float64)
    a = g.adjacency
    if x.shape != (g.n,):
        raise ValueError("x length does not match the graph")
    k_mat = np.asarray(k_mat, dtype=np.float64)
    if k_mat.shape != (g.n, g.n):
        raise ValueError("K shape does not match the graph")
    c23 = w.a2 + w.a3
    c32 = w.a3 + 2.0 * w.a2
    r_mat = -c23 * (a * np.outer(x, x)) - k_mat
    r_vec = c32 * (x * (a @ x)) - w.a1 * x
    z = (
        w.a1 * float(np.sum(x))
        - float(x @ (c23 * (a * model.sigma) + w.a2 * a) @ x)
        - t
    )
    return QuadraticInMu(r_mat=0.5 * (r_mat + r_mat.T), r_vec=r_vec, z=z)


def lifted_coeffs(g, center, w, x, x_mat, t, k_mat):
    """Lifted (R_hat, r_hat, z_hat) with X standing in for xx^T."""
    a = g.adjacency
    c23 = w.a2 + w.a3
    c32 = 2.0 * w.a2 + w.a3
    r_hat = -c23 * (a * x_mat) - k_mat
    r_vec = c32 * np.diag(a @ x_mat) - w.a1 * np.asarray(x, dtype=np.float64)
    z_hat = (
        w.a1 * float(np.sum(x))
        - (c23 * float(np.sum((a * center.sigma) * x_mat)) + w.a2 * float(np.sum(a * x_mat)))
        - t
    )
    return 0.5 * (r_hat + r_hat.T), r_vec, z_hat


def trace_relations_check(x, x_mat, g, model, w):
    """Max-abs residuals of the three lifting identities at the given (x, X)."""
    a = g.adjacency
    x = np.asarray(x, dtype=np.float64)
    c23 = w.a2 + w.a3
    r1 = float(np.abs(a * np.outer(x, x) - a * x_mat).max())
    r2 = float(np.abs(x * (a @ x) - np.diag(a @ x_mat)).max())
    lhs = float(x @ (c23 * (a * model.sigma) + w.a2 * a) @ x)
    rhs = c23 * float(np.sum((a * model.sigma) * x_mat)) + w.a2 * float(
        np.sum(a * x_mat)
    )
    r3 = abs(lhs - rhs)
    return r1, r2, r3


# ---------------------------------------------------------------------------
# Whitening
# ---------------------------------------------------------------------------


class _Whitener:
    """Symmetric square root of the center covariance, with a diagonal fast path."""

    def __init__(self, model):
        sigma = model.sigma
        off = sigma - np.diag(np.diag(sigma))
        self.mu = model.mu
        self.n = model.n
        if off.size == 0 or float(np.abs(off).max()) == 0.0:
            diag = np.diag(sigma)
            if np.any(diag <= 0):
                raise ValueError("center covariance must be positive definite")
            self.diag = np.sqrt(diag)
            self.dense = None
        else:
            vals, vecs = np.linalg.eigh(sigma)
            if vals.min() <= 0:
                raise ValueError("center covariance must be positive definite")
            self.diag = None
            self.dense = (vecs * np.sqrt(vals)) @ vecs.T

    @property
    def matrix(self):
        if self.diag is not None:
            return np.diag(self.diag)
        return self.dense

    def whiten_block(self, r_hat, r_vec, z_hat):
        """Congruence of [[R, r/2], [r'/2, z]] by [[S, mu],[0, 1]]."""
        s = self.matrix
        n = self.n
        out = np.zeros((n + 1, n + 1))
        tl = s @ r_hat @ s
        out[:n, :n] = 0.5 * (tl + tl.T)
        top = s @ (r_hat @ self.mu + 0.5 * r_vec)
        out[:n, n] = top
        out[n, :n] = top
        out[n, n] = float(self.mu @ r_hat @ self.mu + self.mu @ r_vec + z_hat)
        return out

    def point(self, unit):
        """Map a whitened point nu to mu = mu_hat + S nu."""
        if self.diag is not None:
            return self.mu + self.diag * unit
        return self.mu + self.dense @ unit


def ellipsoid_block_raw(center, gamma1):
    """Right-hand side of the support-set LMI in raw coordinates."""
    sigma_inv = np.linalg.inv(center.sigma)
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)
    mu = center.mu
    n = center.n
    omega = np.zeros((n + 1, n + 1))
    omega[:n, :n] = sigma_inv
    omega[:n, n] = -sigma_inv @ mu
    omega[n, :n] = omega[:n, n]
    omega[n, n] = float(mu @ sigma_inv @ mu) - gamma1
    return omega


def whitened_lmi_block(g, center, w, gamma1, x, x_mat, t, k_mat, lam):
    """Slack matrix lam*diag(1..1,-gamma1) - whiten([[R,r/2],[r'/2,z]])."""
    wh = _Whitener(center)
    r_hat, r_vec, z_hat = lifted_coeffs(g, center, w, x, x_mat, t, k_mat)
    omega = np.diag(np.concatenate([np.ones(center.n), [-gamma1]]))
    return lam * omega - wh.whiten_block(r_hat, r_vec, z_hat)


def raw_lmi_min_eig(g, center, w, gamma1, x, x_mat, t, k_mat, lam):
    """Smallest eigenvalue of the raw-form LMI slack (diagnostic)."""
    r_hat, r_vec, z_hat = lifted_coeffs(g, center, w, x, x_mat, t, k_mat)
    n = center.n
    block = np.zeros((n + 1, n + 1))
    block[:n, :n] = r_hat
    block[:n, n] = 0.5 * r_vec
    block[n, :n] = 0.5 * r_vec
    block[n, n] = z_hat
    slack = lam * ellipsoid_block_raw(center, gamma1) - block
    return float(np.linalg.eigvalsh(slack)[0])


# ---------------------------------------------------------------------------
# Program assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DroSdp:
    """Conic program plus the layout needed to read a solution back."""

    program: conic.ConicProgram
    n: int
    method: str
    layout: dict  # block name -> slice into the packed variable vector
    center: object
    weights: object
    ambiguity: AmbiguityParams | None = None

    def extract(self, solution):
        n = self.n
        x = solution.primal[self.layout["x"]].copy()
        schur = conic.unpack_symmetric(solution.primal[self.layout["schur"]], n + 1)
        x_mat = schur[:n, :n].copy()
        out = {
            "x": x,
            "x_mat": x_mat,
            "schur": schur,
            "objective": solution.objective,
            "status": solution.status,
            "iterations": solution.iterations,
        }
        if self.method == METHOD_MINT_DRO:
            out["t"] = float(solution.primal[self.layout["t"]][0])
            out["lam"] = float(solution.primal[self.layout["lam"]][0])
            out["k_mat"] = conic.unpack_symmetric(solution.primal[self.layout["k"]], n)
            out["lmi"] = conic.unpack_symmetric(solution.primal[self.layout["lmi"]], n + 1)
        return out


class _Rows:
    """COO accumulator for equality constraints."""

    def __init__(self):
        self.rows = []
        self.cols = []
        self.vals = []
        self.rhs = []

    def new_row(self, rhs=0.0):
        self.rhs.append(rhs)
        return len(self.rhs) - 1

    def add(self, row, col, val):
        if val != 0.0:
            self.rows.append(row)
            self.cols.append(col)
            self.vals.append(val)


def _pack_weight(i, j):
    return 1.0 if i == j else conic.SQRT2


def _schur_ties(rows, n, x_off, schur_off):
    """Diagonal pins, corner pin, and column-equals-x ties of the lifted block."""
    side = n + 1
    for i in range(n):
        r = rows.new_row(rhs=1.0)
        rows.add(r, schur_off + packed_index(side, i, i), 1.0)
    r = rows.new_row(rhs=1.0)
    rows.add(r, schur_off + packed_index(side, n, n), 1.0)
    for i in range(n):
        r = rows.new_row(rhs=0.0)
        rows.add(r, schur_off + packed_index(side, i, n), 1.0)
        rows.add(r, x_off + i, -conic.SQRT2)


def _column_pieces(g, center, w, n):
    """Raw affine pieces (dR entries, dr entries, dz) per scalar variable.

    Keys: ("x", i), ("t",), ("K", k, l) with k <= l, ("X", k, l) with k < l.
    Diagonal X entries never enter the LMI because the adjacency diagonal
    is zero (they are pinned to one by the Schur ties instead).
    """
    a = g.adjacency
    a_sig = a * center.sigma
    c23 = w.a2 + w.a3
    c32 = 2.0 * w.a2 + w.a3
    inv_sqrt2 = 1.0 / conic.SQRT2
    pieces = {}
    for i in range(n):
        pieces[("x", i)] = ({}, {i: -w.a1}, w.a1)
    pieces[("t",)] = ({}, {}, -1.0)
    for k in range(n):
        for l in range(k, n):
            f = 1.0 if k == l else inv_sqrt2
            if k == l:
                dr_entries = {(k, k): -f}
            else:
                dr_entries = {(k, l): -f, (l, k): -f}
            pieces[("K", k, l)] = (dr_entries, {}, 0.0)
    iu, iv = np.nonzero(np.triu(a, k=1))
    for k, l in zip(iu.tolist(), iv.tolist()):
        f = inv_sqrt2
        akl = a[k, l]
        dr_entries = {(k, l): -c23 * akl * f, (l, k): -c23 * akl * f}
        dvec = {k: c32 * akl * f, l: c32 * akl * f}
        dz = -f * (2.0 * c23 * a_sig[k, l] + 2.0 * w.a2 * akl)
        pieces[("X", k, l)] = (dr_entries, dvec, dz)
    return pieces


def _lift_column(wh, dr_entries, dvec, dz):
    """Whitened-block entries ((i, j, val) with i <= j) of one raw column."""
    n = wh.n
    entries = {}

    def bump(i, j, val):
        if i > j:
            i, j = j, i
        entries[(i, j)] = entries.get((i, j), 0.0) + val

    mu = wh.mu
    if wh.diag is not None:
        s = wh.diag
        for (p, q), val in dr_entries.items():
            if p <= q:
                bump(p, q, val * s[p] * s[q])
            bump(p, n, val * s[p] * mu[q])
        for p, val in dvec.items():
            bump(p, n, 0.5 * val * s[p])
    else:
        s = wh.dense
        tl = np.zeros((n, n))
        tr = np.zeros(n)
        for (p, q), val in dr_entries.items():
            tl += val * np.outer(s[:, p], s[q, :])
            tr += val * s[:, p] * mu[q]
        tl = 0.5 * (tl + tl.T)
        for p, val in dvec.items():
            tr += 0.5 * val * s[:, p]
        for i in range(n):
            for j in range(i, n):
                if tl[i, j] != 0.0:
                    bump(i, j, tl[i, j])
        for i in range(n):
            if tr[i] != 0.0:
                bump(i, n, tr[i])
    corner = dz
    for (p, q), val in dr_entries.items():
        corner += val * mu[p] * mu[q]
    for p, val in dvec.items():
        corner += val * mu[p]
    if corner != 0.0:
        bump(n, n, corner)
    return entries


def _lmi_ties(rows, g, center, w, gamma1, pieces, col_of, lam_col, lmi_off, const_block=None):
    """Tie every packed LMI entry to lam*Omega - (whitened block)."""
    n = center.n
    side = n + 1
    row_of = {}
    for i in range(side):
        for j in range(i, side):
            rhs = 0.0
            if const_block is not None:
                rhs = -_pack_weight(i, j) * const_block[i, j]
            r = rows.new_row(rhs=rhs)
            rows.add(r, lmi_off + packed_index(side, i, j), 1.0)
            row_of[(i, j)] = r
    for i in range(n):
        rows.add(row_of[(i, i)], lam_col, -1.0)
    rows.add(row_of[(n, n)], lam_col, gamma1)
    wh = _Whitener(center)
    for key, (dr_entries, dvec, dz) in pieces.items():
        col = col_of(key)
        if col is None:
            continue
        for (i, j), val in _lift_column(wh, dr_entries, dvec, dz).items():
            rows.add(row_of[(i, j)], col, _pack_weight(i, j) * val)
    return row_of


def build_dro_sdp(g, center, w, amb):
    """Semidefinite relaxation of the worst-case removal problem."""
    n = g.n
    side = n + 1
    blocks = [
        conic.box_block(-np.ones(n), np.ones(n)),  # x
        conic.free_block(1),  # t
        conic.nonneg_block(1),  # lam
        conic.psd_block(n),  # K
        conic.psd_block(side),  # schur lifting of (X, x)
        conic.psd_block(side),  # LMI slack
    ]
    offs = []
    pos = 0
    for b in blocks:
        offs.append(pos)
        pos += b.dim
    x_off, t_off, lam_off, k_off, schur_off, lmi_off = offs
    layout = {
        "x": slice(x_off, x_off + n),
        "t": slice(t_off, t_off + 1),
        "lam": slice(lam_off, lam_off + 1),
        "k": slice(k_off, k_off + packed_length(n)),
        "schur": slice(schur_off, schur_off + packed_length(side)),
        "lmi": slice(lmi_off, lmi_off + packed_length(side)),
    }

    rows = _Rows()
    _schur_ties(rows, n, x_off, schur_off)
    pieces = _column_pieces(g, center, w, n)

    def col_of(key):
        if key[0] == "x":
            return x_off + key[1]
        if key[0] == "t":
            return t_off
        if key[0] == "K":
            return k_off + packed_index(n, key[1], key[2])
        if key[0] == "X":
            return schur_off + packed_index(side, key[1], key[2])
        raise KeyError(key)

    _lmi_ties(rows, g, center, w, amb.gamma1, pieces, col_of, lam_off, lmi_off)

    c = np.zeros(pos)
    c[t_off] = 1.0
    gain = amb.gamma2 * center.sigma + np.outer(center.mu, center.mu)
    c[layout["k"]] = pack_symmetric(gain)

    program = conic.make_program(blocks, c, rows.rows, rows.cols, rows.vals, rows.rhs)
    return DroSdp(
        program=program,
        n=n,
        method=METHOD_MINT_DRO,
        layout=layout,
        center=center,
        weights=w,
        ambiguity=amb,
    )


def build_mint_sdp(g, center, w):
    """Nominal baseline: the same Schur lifting without the robust block."""
    from .loss import build_matrices

    n = g.n
    side = n + 1
    blocks = [
        conic.box_block(-np.ones(n), np.ones(n)),
        conic.psd_block(side),
    ]
    x_off = 0
    schur_off = n
    layout = {
        "x": slice(0, n),
        "schur": slice(schur_off, schur_off + packed_length(side)),
    }
    rows = _Rows()
    _schur_ties(rows, n, x_off, schur_off)

    lm = build_matrices(g, center, w)
    cost = np.zeros((side, side))
    cost[:n, :n] = lm.q
    cost[:n, n] = lm.b
    cost[n, :n] = lm.b
    c = np.zeros(n + packed_length(side))
    c[layout["schur"]] = pack_symmetric(cost)

    program = conic.make_program(blocks, c, rows.rows, rows.cols, rows.vals, rows.rhs)
    return DroSdp(
        program=program,
        n=n,
        method=METHOD_MINT,
        layout=layout,
        center=center,
        weights=w,
    )


# ---------------------------------------------------------------------------
# Inner worst case at a fixed removal vector
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerWorstCase:
    value: float
    t: float
    k_mat: np.ndarray
    lam: float
    status: str
    iterations: int


def inner_worst_case(g, x_fixed, center, w, amb, options=None):
    """Dual bound on the worst-case expected loss with x held fixed."""
    x = np.asarray(x_fixed, dtype=np.float64)
    if np.any(np.abs(x) > 1.0 + 1e-9):
        raise ValueError("x entries must lie in [-1, 1]")
    n = g.n
    side = n + 1
    blocks = [
        conic.free_block(1),  # t
        conic.nonneg_block(1),  # lam
        conic.psd_block(n),  # K
        conic.psd_block(side),  # LMI slack
    ]
    t_off = 0
    lam_off = 1
    k_off = 2
    lmi_off = 2 + packed_length(n)

    # Constant part of the whitened block: fixed-x quadratic with t = 0, K = 0.
    wh = _Whitener(center)
    quad = quadratic_in_mu(g, x, center, w, 0.0, np.zeros((n, n)))
    const_block = wh.whiten_block(quad.r_mat, quad.r_vec, quad.z)

    pieces = {("t",): ({}, {}, -1.0)}
    inv_sqrt2 = 1.0 / conic.SQRT2
    for k in range(n):
        for l in range(k, n):
            f = 1.0 if k == l else inv_sqrt2
            if k == l:
                dr_entries = {(k, k): -f}
            else:
                dr_entries = {(k, l): -f, (l, k): -f}
            pieces[("K", k, l)] = (dr_entries, {}, 0.0)

    def col_of(key):
        if key[0] == "t":
            return t_off
        if key[0] == "K":
            return k_off + packed_index(n, key[1], key[2])
        raise KeyError(key)

    rows = _Rows()
    _lmi_ties(
        rows, g, center, w, amb.gamma1, pieces, col_of, lam_off, lmi_off, const_block
    )

    dim = 2 + packed_length(n) + packed_length(side)
    c = np.zeros(dim)
    c[t_off] = 1.0
    gain = amb.gamma2 * center.sigma + np.outer(center.mu, center.mu)
    c[k_off : k_off + packed_length(n)] = pack_symmetric(gain)

    program = conic.make_program(blocks, c, rows.rows, rows.cols, rows.vals, rows.rhs)
    sol = conic.solve(program, options)
    k_mat = conic.unpack_symmetric(sol.primal[k_off : k_off + packed_length(n)], n)
    return InnerWorstCase(
        value=sol.objective,
        t=float(sol.primal[t_off]),
        k_mat=k_mat,
        lam=float(sol.primal[lam_off]),
        status=sol.status,
        iterations=sol.iterations,
    )


def sample_support_ellipsoid(center, gamma1, count, seed=0, boundary_fraction=0.5):
    """Points on/inside the support ellipsoid, whitened-uniform."""
    rng = np.random.default_rng(seed)
    wh = _Whitener(center)
    n = center.n
    out = np.empty((count, n))
    n_boundary = int(round(count * boundary_fraction))
    for i in range(count):
        u = rng.standard_normal(n)
        norm = np.linalg.norm(u)
        if norm == 0:
            u = np.zeros(n)
        else:
            u = u / norm
        radius = 1.0 if i < n_boundary else rng.random() ** (1.0 / n)
        out[i] = wh.point(math.sqrt(gamma1) * radius * u)
    return out
