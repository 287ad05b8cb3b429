"""Acceptance suite: one test per criterion, each printing a PASS line."""

import math

import numpy as np
import pytest

from conftest import enumeration_loss, random_graph, random_model, random_weights
from netprune import cli, conic
from netprune.conic import SolverOptions, pack_symmetric, packed_index, psd_block, make_program
from netprune.decisions import brute_force_binary, brute_force_robust
from netprune.eigen import jacobi_eigen
from netprune.experiments import ExperimentConfig, rows_to_csv, run_experiment
from netprune.graphs import generate_ba, generate_ws
from netprune.loss import build_matrices, expected_loss
from netprune.moments import MomentModel, bernoulli_sigma
from netprune.robust import (
    AmbiguityParams,
    CalibrationInput,
    build_dro_sdp,
    build_mint_sdp,
    calibrate_gamma1,
    inner_worst_case,
    quadratic_in_mu,
    sample_support_ellipsoid,
    trace_relations_check,
)

TIGHT = SolverOptions(eps_abs=1e-7, eps_rel=1e-7, max_iters=200000)


def _report(num, label, detail=""):
    print(f"PASS criterion {num}: {label}" + (f" ({detail})" if detail else ""))


def test_criterion_01_calibration_regression(capsys):
    beta_128 = calibrate_gamma1(CalibrationInput(128, 5, 256.0, 0.05, 0.05))
    beta_500 = calibrate_gamma1(CalibrationInput(500, 5, 1000.0, 0.05, 0.05))
    assert int(beta_128) == 1012
    assert int(beta_500) == 3956
    cli.main(["bounds", "--n", "128", "--m-samples", "5", "--r2", "256"])
    out1 = capsys.readouterr().out
    cli.main(["bounds", "--n", "500", "--m-samples", "5", "--r2", "1000"])
    out2 = capsys.readouterr().out
    assert "beta1_integer_part = 1012" in out1
    assert "beta1_integer_part = 3956" in out2
    _report(1, "calibration bound reproduces 1012 and 3956")


def test_criterion_02_moment_form_oracle():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 13))
        g = random_graph(rng, n, p=0.45)
        w = random_weights(rng)
        mu = rng.uniform(0.05, 0.95, n)
        model = MomentModel(mu, bernoulli_sigma(mu))
        lm = build_matrices(g, model, w)
        for _ in range(20):
            x = rng.choice([-1.0, 1.0], n)
            diff = abs(expected_loss(x, lm) - enumeration_loss(x, mu, g.adjacency, w))
            worst = max(worst, diff)
    assert worst <= 1e-10
    _report(2, "expected loss equals configuration enumeration", f"max diff {worst:.2e}")


def test_criterion_03_quadratic_in_mean_identity():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 9))
        g = random_graph(rng, n, p=0.5)
        w = random_weights(rng)
        model = random_model(rng, n)
        x = rng.uniform(-1.0, 1.0, n)
        t = float(rng.normal())
        k_half = rng.standard_normal((n, n))
        k_mat = k_half @ k_half.T
        mu = rng.uniform(0.0, 1.0, n)
        quad = quadratic_in_mu(g, x, model, w, t, k_mat)
        lm = build_matrices(g, MomentModel(mu, model.sigma), w)
        want = expected_loss(x, lm) - t - float(mu @ k_mat @ mu)
        scale = 1.0 + abs(want)
        worst = max(worst, abs(quad.evaluate(mu) - want) / scale)
    assert worst <= 1e-9
    _report(3, "quadratic-in-mean coefficients match the loss path", f"max rel diff {worst:.2e}")


def test_criterion_04_lifting_identities():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 10))
        g = random_graph(rng, n, p=0.5)
        w = random_weights(rng)
        model = random_model(rng, n)
        x = rng.choice([-1.0, 1.0], n)
        res = trace_relations_check(x, np.outer(x, x), g, model, w)
        worst = max(worst, max(res))
    assert worst <= 1e-10
    _report(4, "rank-one lifting identities hold", f"max residual {worst:.2e}")


def _sound_gamma2(model, gamma1, slack=1.1):
    whitened = np.linalg.solve(np.linalg.cholesky(model.sigma), model.mu)
    return slack * (gamma1 + 2.0 * math.sqrt(gamma1) * float(np.linalg.norm(whitened)))


def test_criterion_05_duality_bound():
    rng = np.random.default_rng(505)
    worst_margin = np.inf
    for _ in range(10):
        g = random_graph(rng, 8, p=0.4)
        w = random_weights(rng)
        model = random_model(rng, 8, lo=0.2, hi=0.8)
        gamma1 = float(rng.uniform(0.5, 1.2))
        amb = AmbiguityParams(gamma1, _sound_gamma2(model, gamma1), model)
        pts = sample_support_ellipsoid(model, gamma1, 1000, seed=int(rng.integers(1 << 31)))
        for _ in range(5):
            x = rng.choice([-1.0, 1.0], 8)
            inner = inner_worst_case(g, x, model, w, amb, TIGHT)
            quad = quadratic_in_mu(g, x, model, w, 0.0, np.zeros((8, 8)))
            sampled = max(quad.evaluate(p) for p in pts)
            margin = inner.value - sampled
            worst_margin = min(worst_margin, margin / (1.0 + abs(inner.value)))
            assert margin >= -1e-6 * (1.0 + abs(inner.value))
    assert worst_margin >= -1e-6
    _report(5, "dual bound dominates sampled support points", f"min margin {worst_margin:.2e}")


def test_criterion_06_reversion_to_nominal():
    rng = np.random.default_rng(606)
    worst = 0.0
    opts = SolverOptions(eps_abs=1e-5, eps_rel=1e-5, max_iters=100000)
    for _ in range(10):
        n = int(rng.integers(3, 9))
        g = random_graph(rng, n, p=0.45)
        w = random_weights(rng)
        model = random_model(rng, n, lo=0.2, hi=0.8)
        amb = AmbiguityParams(1e-6, 1e-6, model)
        x = rng.choice([-1.0, 1.0], n)
        inner = inner_worst_case(g, x, model, w, amb, opts)
        nominal = expected_loss(x, build_matrices(g, model, w))
        rel = abs(inner.value - nominal) / (1.0 + abs(nominal))
        worst = max(worst, rel)
        assert rel <= 1e-2
    _report(6, "tiny radii revert the worst case to the nominal loss", f"max rel diff {worst:.2e}")


def test_criterion_07_relaxation_ordering():
    rng = np.random.default_rng(707)
    fast = SolverOptions(eps_abs=1e-4, eps_rel=1e-4, max_iters=20000)
    refine = SolverOptions(eps_abs=1e-7, eps_rel=1e-7, max_iters=200000)
    sdp_opts = SolverOptions(eps_abs=1e-6, eps_rel=1e-6, max_iters=150000)
    worst_dro = np.inf
    worst_mint = np.inf
    for _ in range(10):
        g = random_graph(rng, 8, p=0.4)
        w = random_weights(rng)
        model = random_model(rng, 8, lo=0.2, hi=0.8)
        gamma1 = float(rng.uniform(0.5, 1.5))
        gamma2 = float(rng.uniform(1.5, 3.0))
        amb = AmbiguityParams(gamma1, gamma2, model)

        dro_sol = conic.solve(build_dro_sdp(g, model, w, amb).program, sdp_opts)
        _, robust_best = brute_force_robust(
            g, model, w, amb, options=fast, refine_options=refine, refine_top=8
        )
        gap_dro = robust_best - dro_sol.objective
        assert gap_dro >= -1e-4 * (1.0 + abs(robust_best))
        worst_dro = min(worst_dro, gap_dro / (1.0 + abs(robust_best)))

        mint_sol = conic.solve(build_mint_sdp(g, model, w).program, sdp_opts)
        _, binary_best = brute_force_binary(g, model, w)
        gap_mint = binary_best - mint_sol.objective
        assert gap_mint >= -1e-4 * (1.0 + abs(binary_best))
        worst_mint = min(worst_mint, gap_mint / (1.0 + abs(binary_best)))
    _report(
        7,
        "SDP optima lower-bound the binary optima",
        f"min normalized gaps dro {worst_dro:.2e}, nominal {worst_mint:.2e}",
    )


def test_criterion_08_solver_eigenvalue_sanity():
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(10):
        s = rng.standard_normal((5, 5))
        s = 0.5 * (s + s.T)
        rows = [0] * 5
        cols = [packed_index(5, i, i) for i in range(5)]
        program = make_program(
            [psd_block(5)], pack_symmetric(s), rows, cols, [1.0] * 5, [1.0]
        )
        sol = conic.solve(program, SolverOptions(eps_abs=1e-6, eps_rel=1e-6, max_iters=100000))
        lam_min = jacobi_eigen(s)[0][-1]
        worst = max(worst, abs(sol.objective - lam_min))
        assert abs(sol.objective - lam_min) <= 1e-4
    _report(8, "eigenvalue program recovers the smallest eigenvalue", f"max diff {worst:.2e}")


def test_criterion_09_generator_regression():
    for m, edges in ((3, 375), (4, 496), (5, 615)):
        assert generate_ba(128, m, seed=1).edge_count == edges
    for k, edges in ((10, 640), (14, 896), (20, 1280)):
        assert generate_ws(128, k, 0.2, seed=1).edge_count == edges
    _report(9, "generator edge counts match the reference table")


ACCEPTANCE_CONFIG = ExperimentConfig.from_dict(
    dict(
        graph={"family": "ba", "n": 32, "m": 3},
        weights=[1 / 3, 1 / 3, 1 / 3],
        noise=[0.3, 0.5],
        repetitions=10,
        malicious_fraction=0.10,
        gamma1=64.0,
        gamma2=1024.0,
        rounding_trials=100,
        eval_samples=1000,
        eps_abs=1e-4,
        eps_rel=1e-4,
        max_iters=30000,
        master_seed=2026,
        include_wall_time=False,
    )
)


@pytest.fixture(scope="module")
def robustness_runs():
    first = run_experiment(ACCEPTANCE_CONFIG)
    second = run_experiment(ACCEPTANCE_CONFIG)
    return first, second


def test_criterion_10_directional_robustness(robustness_runs):
    rows, _ = robustness_runs[0]
    by_cell = {}
    for row in rows:
        by_cell.setdefault((row["noise_std"], row["method"]), []).append(
            row["expected_loss_eval"]
        )
    for noise in (0.3, 0.5):
        mint = np.array(by_cell[(noise, "mint")])
        dro = np.array(by_cell[(noise, "mint_dro")])
        assert np.all(np.isfinite(mint)) and np.all(np.isfinite(dro))
        assert dro.mean() <= mint.mean(), f"robust method worse on average at noise {noise}"
    mint5 = np.array(by_cell[(0.5, "mint")])
    dro5 = np.array(by_cell[(0.5, "mint_dro")])
    wins = int(np.sum(dro5 < mint5))
    assert wins >= 7, f"robust method won only {wins}/10 topologies at noise 0.5"
    _report(
        10,
        "robust method dominates the nominal one under noise",
        f"means dro/mint at 0.3: {np.array(by_cell[(0.3,'mint_dro')]).mean():.3f}/"
        f"{np.array(by_cell[(0.3,'mint')]).mean():.3f}, at 0.5: {dro5.mean():.3f}/"
        f"{mint5.mean():.3f}, wins {wins}/10",
    )


def test_criterion_11_experiment_determinism(robustness_runs):
    (rows1, aggs1), (rows2, aggs2) = robustness_runs
    csv1 = rows_to_csv(rows1, aggs1)
    csv2 = rows_to_csv(rows2, aggs2)
    assert csv1 == csv2
    _report(11, "repeated sweep reproduces the CSV byte for byte", f"{len(csv1)} bytes")
