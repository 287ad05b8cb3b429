"""Configuration-driven experiment harness.

A run sweeps (topology repetition, noise level, method) cells: each cell
generates a topology, plants malicious nodes, simulates an evaluation
model, perturbs it into the decision-time estimate, solves the chosen
method, rounds, and scores the decision under the evaluation model. Every
stochastic choice draws from a seed derived by hashing the master seed
with the cell coordinates, so cells are order-independent and the output
CSV is reproducible byte for byte.
"""

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import conic, graphs, moments, robust
from .decisions import evaluate, make_decision, round_randomized
from .loss import TradeoffWeights, build_matrices, expected_loss

CSV_COLUMNS = [
    "seed",
    "noise_std",
    "method",
    "expected_loss_eval",
    "interpretable_mean",
    "solver_status",
    "iterations",
    "wall_ms",
    "malicious_nodes",
    "removed_nodes",
]


def derive_seed(master, *parts):
    """Stable 63-bit seed from the master seed and cell coordinates."""
    text = "|".join([str(master), *[str(p) for p in parts]])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class GraphSpec:
    family: str = "ba"  # "ba" | "ws" | "edgelist"
    n: int = 32
    m: int = 3  # attachments per arrival (ba)
    k: int = 10  # ring degree (ws)
    p: float = 0.2  # rewire probability (ws)
    path: str | None = None  # edge-list file (edgelist)
    n_sub: int | None = None  # subsample size (edgelist)

    def realize(self, seed):
        if self.family == "ba":
            return graphs.generate_ba(self.n, self.m, seed=seed)
        if self.family == "ws":
            return graphs.generate_ws(self.n, self.k, self.p, seed=seed)
        if self.family == "edgelist":
            with open(self.path, "r", encoding="utf-8") as fh:
                g = graphs.load_edge_list(fh)
            if self.n_sub is not None:
                g = graphs.subsample_nodes(g, self.n_sub, seed=seed)
            return g
        raise ValueError(f"unknown graph family {self.family!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec = field(default_factory=GraphSpec)
    weights: tuple = (1 / 3, 1 / 3, 1 / 3)
    noise: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    repetitions: int = 1
    malicious_fraction: float = 0.10
    strategic: bool = False
    methods: tuple = (robust.METHOD_MINT, robust.METHOD_MINT_DRO)
    gamma1: float = 1.0  # uncalibrated defaults; see `calibration`
    gamma2: float = 2.0
    calibration: dict | None = None  # {m_samples, r2, delta1, delta2}
    benign_beta: tuple = (2.0, 8.0)
    malicious_beta: tuple = (8.0, 2.0)
    rounding_trials: int = 100
    eval_samples: int = 1000
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    max_iters: int = 50000
    rho: float = 1.0
    master_seed: int = 0
    include_wall_time: bool = True
    output: str | None = None

    def solver_options(self):
        return conic.SolverOptions(
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
            max_iters=self.max_iters,
            rho=self.rho,
        )

    def tradeoff(self):
        return TradeoffWeights(*self.weights)

    def gammas(self, n):
        """Explicit radii, or gamma1 from the concentration bound when
        calibration inputs are supplied (gamma2 falls back to the explicit
        value whenever its bound is invalid)."""
        if self.calibration is None:
            return self.gamma1, self.gamma2
        cal = robust.CalibrationInput(
            n=n,
            m_samples=int(self.calibration["m_samples"]),
            r2=float(self.calibration["r2"]),
            delta1=float(self.calibration["delta1"]),
            delta2=float(self.calibration["delta2"]),
        )
        g1 = calibrated_gamma1(cal)
        g2_bound = robust.calibrate_gamma2(cal)
        g2 = g2_bound.value * (1.0 + 1e-9) if g2_bound.valid else self.gamma2
        return g1, g2

    @staticmethod
    def from_dict(data):
        data = dict(data)
        if "graph" in data and not isinstance(data["graph"], GraphSpec):
            data["graph"] = GraphSpec(**data["graph"])
        for key in ("weights", "noise", "methods", "benign_beta", "malicious_beta"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        return ExperimentConfig(**data)

    def to_dict(self):
        return asdict(self)


def calibrated_gamma1(cal):
    """Strictly above the bound, as the containment guarantee requires."""
    return robust.calibrate_gamma1(cal) * (1.0 + 1e-9)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def _pick_malicious(g, cfg, rep):
    count = int(round(cfg.malicious_fraction * g.n))
    count = max(0, min(count, g.n))
    if cfg.strategic:
        return sorted(graphs.greedy_strategic_nodes(g, count))
    rng = np.random.default_rng(derive_seed(cfg.master_seed, "malicious", rep))
    return sorted(rng.choice(g.n, size=count, replace=False).tolist())


def solve_method(g, est, w, method, gamma1, gamma2, options):
    """Build and solve one method's SDP; returns (sdp, solution)."""
    if method == robust.METHOD_MINT:
        sdp = robust.build_mint_sdp(g, est, w)
    elif method == robust.METHOD_MINT_DRO:
        amb = robust.AmbiguityParams(gamma1, gamma2, est)
        sdp = robust.build_dro_sdp(g, est, w, amb)
    else:
        raise ValueError(f"unknown method {method!r}")
    return sdp, conic.solve(sdp.program, options)


def decide_from_solution(sdp, solution, trials, score, seed):
    """Round a solved relaxation into a RemovalDecision.

    The relaxed x is read off the Schur block column so the Gram factor and
    the vector are mutually consistent up to solver accuracy.
    """
    ext = sdp.extract(solution)
    x_rel = np.clip(ext["schur"][: sdp.n, sdp.n], -1.0, 1.0)
    x_bin = round_randomized(x_rel, ext["x_mat"], trials, score, seed=seed)
    return make_decision(x_rel, x_bin, sdp.method, solution.objective)


def run_cell(g, evalm, est, cfg, method, rep, noise_idx):
    """One (topology, noise, method) cell; never raises on solver trouble."""
    w = cfg.tradeoff()
    lm_est = build_matrices(g, est, w)
    gamma1, gamma2 = cfg.gammas(g.n)
    t0 = time.perf_counter()
    try:
        sdp, sol = solve_method(g, est, w, method, gamma1, gamma2, cfg.solver_options())
        decision = decide_from_solution(
            sdp,
            sol,
            cfg.rounding_trials,
            lambda xb: expected_loss(xb, lm_est),
            seed=derive_seed(cfg.master_seed, "round", rep, noise_idx, method),
        )
        report = evaluate(
            decision,
            evalm,
            g,
            w,
            samples=cfg.eval_samples,
            seed=derive_seed(cfg.master_seed, "evalsamples", rep, noise_idx, method),
        )
        status = sol.status
        iterations = sol.iterations
        expected = report.expected_loss_eval
        interp = report.interpretable_mean
        removed = sorted(decision.removed_set)
    except Exception as exc:  # pragma: no cover - defensive sweep guard
        status = f"error:{type(exc).__name__}"
        iterations = 0
        expected = math.nan
        interp = math.nan
        removed = []
    wall = time.perf_counter() - t0
    return {
        "expected_loss_eval": expected,
        "interpretable_mean": interp,
        "solver_status": status,
        "iterations": iterations,
        "wall_ms": int(round(wall * 1000.0)) if cfg.include_wall_time else -1,
        "removed_nodes": removed,
    }


def run_experiment(cfg):
    """Sweep all cells; returns (rows, aggregate_rows) of plain dicts."""
    rows = []
    for rep in range(cfg.repetitions):
        graph_seed = derive_seed(cfg.master_seed, "graph", rep)
        g = cfg.graph.realize(graph_seed)
        malicious = _pick_malicious(g, cfg, rep)
        evalm = moments.simulate_moments(
            g,
            malicious,
            benign_beta=cfg.benign_beta,
            malicious_beta=cfg.malicious_beta,
            seed=derive_seed(cfg.master_seed, "eval", rep),
            kind=moments.KIND_EVALUATION,
        )
        for noise_idx, noise_std in enumerate(cfg.noise):
            est = moments.perturb(
                evalm,
                noise_std,
                seed=derive_seed(cfg.master_seed, "noise", rep, noise_idx),
            )
            for method in cfg.methods:
                cell = run_cell(g, evalm, est, cfg, method, rep, noise_idx)
                rows.append(
                    {
                        "seed": graph_seed,
                        "noise_std": noise_std,
                        "method": method,
                        **cell,
                        "malicious_nodes": malicious,
                    }
                )
    return rows, aggregate_rows(rows)


def aggregate_rows(rows):
    """Mean and standard error per (noise level, method), in sweep order."""
    keys = []
    groups = {}
    for row in rows:
        key = (row["noise_std"], row["method"])
        if key not in groups:
            groups[key] = []
            keys.append(key)
        groups[key].append(row)
    out = []
    for key in keys:
        vals = groups[key]
        for stat in ("mean", "sem"):
            entry = {
                "seed": stat,
                "noise_std": key[0],
                "method": key[1],
                "solver_status": "",
                "iterations": "",
                "wall_ms": "",
                "malicious_nodes": "",
                "removed_nodes": "",
            }
            for col in ("expected_loss_eval", "interpretable_mean"):
                data = np.array([v[col] for v in vals], dtype=np.float64)
                if stat == "mean":
                    entry[col] = float(np.mean(data))
                else:
                    entry[col] = (
                        float(np.std(data, ddof=1) / np.sqrt(len(data)))
                        if len(data) > 1
                        else 0.0
                    )
            out.append(entry)
    return out


def _format_value(value):
    if isinstance(value, float):
        return format(value, ".10g")
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    return str(value)


def rows_to_csv(rows, aggregates):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in list(rows) + list(aggregates):
        writer.writerow([_format_value(row.get(col, "")) for col in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(path, rows, aggregates):
    text = rows_to_csv(rows, aggregates)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text
