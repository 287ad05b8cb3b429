"""First-order conic solver for linear objectives over products of cones.

Problems are stated in a block form: the packed variable vector is a
concatenation of cone blocks (free, nonnegative, box, PSD), symmetric
matrices being stored in scaled upper-triangle packing so that Frobenius
inner products of matrices equal dot products of packed vectors. Affine
equality constraints tie entries of the matrix blocks to the scalar
blocks. The solver is a two-block ADMM: an equality-constrained
least-squares step (cached factorization of A A^T) alternating with
blockwise cone projections, Jacobi eigendecomposition supplying the PSD
projection.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .eigen import project_psd

SQRT2 = np.sqrt(2.0)

_PACK_CACHE = {}


def packed_length(order):
    return order * (order + 1) // 2


def _pack_data(order):
    cached = _PACK_CACHE.get(order)
    if cached is None:
        rows, cols = np.triu_indices(order)
        weights = np.where(rows == cols, 1.0, SQRT2)
        cached = (rows, cols, weights)
        _PACK_CACHE[order] = cached
    return cached


def pack_symmetric(matrix):
    """Scaled upper-triangle vectorization; an isometry for symmetric matrices."""
    m = np.asarray(matrix, dtype=np.float64)
    rows, cols, weights = _pack_data(m.shape[0])
    return m[rows, cols] * weights


def unpack_symmetric(packed, order):
    """Inverse of pack_symmetric."""
    rows, cols, weights = _pack_data(order)
    vals = np.asarray(packed, dtype=np.float64) / weights
    m = np.zeros((order, order))
    m[rows, cols] = vals
    m[cols, rows] = vals
    return m


def packed_index(order, i, j):
    """Position of entry (i, j), i <= j, in the packed vector."""
    if i > j:
        i, j = j, i
    return i * order - (i * (i - 1)) // 2 + (j - i)


@dataclass(frozen=True)
class ConeBlock:
    """One block of the packed variable vector with its cone membership."""

    kind: str  # "free" | "nonneg" | "box" | "psd"
    dim: int  # packed length within the variable vector
    order: int = 0  # matrix side, PSD blocks only
    lo: np.ndarray | None = None  # box blocks only
    hi: np.ndarray | None = None


def free_block(dim):
    return ConeBlock("free", dim)


def nonneg_block(dim):
    return ConeBlock("nonneg", dim)


def box_block(lo, hi):
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("invalid box bounds")
    return ConeBlock("box", lo.size, lo=lo, hi=hi)


def psd_block(order):
    if order < 1:
        raise ValueError("PSD block order must be at least 1")
    return ConeBlock("psd", packed_length(order), order=order)


@dataclass(frozen=True)
class ConicProgram:
    """min c.v subject to A v = b and each block of v in its cone."""

    blocks: tuple
    c: np.ndarray
    a_eq: sp.csr_matrix
    b_eq: np.ndarray

    def __post_init__(self):
        dim = sum(b.dim for b in self.blocks)
        if self.c.shape != (dim,):
            raise ValueError("objective length does not match variable layout")
        if self.a_eq.shape[1] != dim:
            raise ValueError("constraint matrix width does not match variables")
        if self.b_eq.shape != (self.a_eq.shape[0],):
            raise ValueError("rhs length does not match constraint rows")

    @property
    def dim(self):
        return sum(b.dim for b in self.blocks)

    @property
    def n_eq(self):
        return self.a_eq.shape[0]

    def offsets(self):
        out = []
        pos = 0
        for b in self.blocks:
            out.append(pos)
            pos += b.dim
        return out

    def block_slices(self):
        return [slice(o, o + b.dim) for o, b in zip(self.offsets(), self.blocks)]

    def to_json_dict(self):
        """Plain-data dump for cross-checking against external solvers."""
        coo = self.a_eq.tocoo()
        blocks = []
        for b in self.blocks:
            entry = {"kind": b.kind, "dim": int(b.dim)}
            if b.kind == "psd":
                entry["order"] = int(b.order)
            if b.kind == "box":
                entry["lo"] = b.lo.tolist()
                entry["hi"] = b.hi.tolist()
            blocks.append(entry)
        return {
            "blocks": blocks,
            "objective": self.c.tolist(),
            "rhs": self.b_eq.tolist(),
            "triplets": {
                "row": coo.row.tolist(),
                "col": coo.col.tolist(),
                "val": coo.data.tolist(),
            },
        }

    def dump_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)


def make_program(blocks, c, rows, cols, vals, b_eq):
    """Assemble a ConicProgram from COO triplets."""
    blocks = tuple(blocks)
    dim = sum(b.dim for b in blocks)
    n_eq = len(b_eq)
    a = sp.coo_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n_eq, dim)
    ).tocsr()
    return ConicProgram(
        blocks, np.asarray(c, dtype=np.float64), a, np.asarray(b_eq, dtype=np.float64)
    )


@dataclass(frozen=True)
class SolverOptions:
    eps_abs: float = 1e-5
    eps_rel: float = 1e-5
    max_iters: int = 50000
    rho: float = 1.0
    seed: int = 0  # reserved; the solver is deterministic and draws nothing
    equilibrate: bool = True
    ruiz_iters: int = 10
    check_every: int = 25


@dataclass(frozen=True)
class Residuals:
    primal: float
    dual: float
    gap: float


@dataclass
class ConicSolution:
    primal: np.ndarray  # packed variable vector, original scaling
    blocks: list  # per-block values; PSD blocks as symmetric matrices
    objective: float
    status: str  # "optimal" | "max_iters" | "infeasible_suspect"
    residuals: Residuals
    iterations: int


def _project_block(block, value):
    if block.kind == "free":
        return value
    if block.kind == "nonneg":
        return np.maximum(value, 0.0)
    if block.kind == "box":
        return np.clip(value, block.lo, block.hi)
    if block.order == 1:
        return np.maximum(value, 0.0)
    mat = unpack_symmetric(value, block.order)
    return pack_symmetric(project_psd(mat))


def _ruiz_equilibrate(a, blocks, iters):
    """Row and column scalings of A; PSD blocks get one column scale each."""
    n_eq, dim = a.shape
    e = np.ones(n_eq)
    d = np.ones(dim)
    slices = []
    pos = 0
    for b in blocks:
        slices.append(slice(pos, pos + b.dim))
        pos += b.dim
    work = a.copy()
    for _ in range(iters):
        row_inf = np.asarray(abs(work).max(axis=1).todense()).ravel()
        row_scale = 1.0 / np.sqrt(np.where(row_inf > 0, row_inf, 1.0))
        work = sp.diags(row_scale) @ work
        e *= row_scale
        col_inf = np.asarray(abs(work).max(axis=0).todense()).ravel()
        col_scale = np.ones(dim)
        for b, sl in zip(blocks, slices):
            if b.kind == "psd":
                peak = col_inf[sl].max() if b.dim else 0.0
                col_scale[sl] = 1.0 / np.sqrt(peak) if peak > 0 else 1.0
            else:
                vals = col_inf[sl]
                col_scale[sl] = 1.0 / np.sqrt(np.where(vals > 0, vals, 1.0))
        work = work @ sp.diags(col_scale)
        d *= col_scale
    return e, d


def _support_box(block, s):
    # Support function of [lo, hi] evaluated at s.
    return float(np.sum(block.hi * np.maximum(s, 0.0) + block.lo * np.minimum(s, 0.0)))


def solve(program, options=None):
    """Run the splitting loop until residual tolerances or max_iters."""
    opts = options or SolverOptions()
    blocks = program.blocks
    dim = program.dim
    n_eq = program.n_eq
    rho = float(opts.rho)

    c = program.c.copy()
    b = program.b_eq.copy()
    a = program.a_eq

    if opts.equilibrate and n_eq > 0 and a.nnz > 0:
        e_scale, d_scale = _ruiz_equilibrate(a, blocks, opts.ruiz_iters)
    else:
        e_scale = np.ones(n_eq)
        d_scale = np.ones(dim)

    a_s = sp.diags(e_scale) @ a @ sp.diags(d_scale) if n_eq > 0 else a
    a_s = a_s.tocsr()
    at_s = a_s.T.tocsr()
    b_s = e_scale * b
    c_s = d_scale * c

    scaled_blocks = []
    pos = 0
    for blk in blocks:
        if blk.kind == "box":
            ds = d_scale[pos : pos + blk.dim]
            scaled_blocks.append(replace(blk, lo=blk.lo / ds, hi=blk.hi / ds))
        else:
            scaled_blocks.append(blk)
        pos += blk.dim

    if n_eq > 0:
        gram = (a_s @ at_s).tocsc()
        lu = splu(gram)
        q = a_s @ (c_s / rho)

    slices = program.block_slices()
    v = np.zeros(dim)
    z = np.zeros(dim)
    u = np.zeros(dim)
    y = np.zeros(n_eq)
    sqrt_dim = np.sqrt(dim)

    status = "max_iters"
    iterations = opts.max_iters
    for it in range(1, opts.max_iters + 1):
        w = z - u
        if n_eq > 0:
            y = lu.solve(a_s @ w - b_s - q) * rho
            v = w - (c_s + at_s @ y) / rho
        else:
            v = w - c_s / rho
        z_prev = z
        vu = v + u
        z = np.empty(dim)
        for blk, sl in zip(scaled_blocks, slices):
            z[sl] = _project_block(blk, vu[sl])
        u = u + v - z

        if it % opts.check_every == 0 or it == opts.max_iters:
            if not np.all(np.isfinite(z)):
                status = "infeasible_suspect"
                iterations = it
                break
            r_norm = float(np.linalg.norm(v - z))
            s_norm = rho * float(np.linalg.norm(z - z_prev))
            eps_pri = sqrt_dim * opts.eps_abs + opts.eps_rel * max(
                float(np.linalg.norm(v)), float(np.linalg.norm(z))
            )
            eps_dual = sqrt_dim * opts.eps_abs + opts.eps_rel * rho * float(
                np.linalg.norm(u)
            )
            if r_norm <= eps_pri and s_norm <= eps_dual:
                z_orig = d_scale * z
                if n_eq > 0:
                    eq_res = float(np.linalg.norm(a @ z_orig - b))
                    eq_tol = opts.eps_abs * np.sqrt(max(n_eq, 1)) + opts.eps_rel * (
                        1.0 + float(np.linalg.norm(b))
                    )
                    if eq_res > eq_tol:
                        continue
                status = "optimal"
                iterations = it
                break
            if rho * float(np.linalg.norm(u)) > 1e10 * (1.0 + float(np.linalg.norm(c_s))):
                status = "infeasible_suspect"
                iterations = it
                break

    z_orig = d_scale * z
    y_orig = e_scale * y if n_eq > 0 else y
    mu_orig = rho * u / d_scale

    primal_res = (
        float(np.linalg.norm(a @ z_orig - b)) / (1.0 + float(np.linalg.norm(b)))
        if n_eq > 0
        else 0.0
    )
    dual_vec = c + (a.T @ y_orig if n_eq > 0 else 0.0) + mu_orig
    dual_res = float(np.linalg.norm(dual_vec)) / (1.0 + float(np.linalg.norm(c)))

    p_obj = float(c @ z_orig)
    d_obj = -float(b @ y_orig) if n_eq > 0 else 0.0
    for blk, sl in zip(blocks, slices):
        if blk.kind == "box":
            d_obj -= _support_box(blk, mu_orig[sl])
    gap = abs(p_obj - d_obj) / (1.0 + abs(p_obj) + abs(d_obj))

    out_blocks = []
    for blk, sl in zip(blocks, slices):
        val = z_orig[sl].copy()
        if blk.kind == "psd" and blk.order > 1:
            out_blocks.append(unpack_symmetric(val, blk.order))
        else:
            out_blocks.append(val)

    return ConicSolution(
        primal=z_orig,
        blocks=out_blocks,
        objective=p_obj,
        status=status,
        residuals=Residuals(primal=primal_res, dual=dual_res, gap=gap),
        iterations=iterations,
    )
