"""Command-line front door: graph generation, calibration bounds,
single solves, and the experiment sweep."""

import argparse
import json
import os
import sys

import numpy as np

from . import conic, experiments, graphs, moments, robust
from .decisions import evaluate
from .experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    derive_seed,
    decide_from_solution,
    load_config,
    rows_to_csv,
    solve_method,
    write_csv,
)
from .loss import TradeoffWeights, build_matrices, expected_loss


def _parse_weights(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("weights must be three comma-separated numbers")
    return TradeoffWeights(*parts)


def _build_graph(args):
    if args.graph_file:
        with open(args.graph_file, "r", encoding="utf-8") as fh:
            g = graphs.load_edge_list(fh)
        if args.n_sub:
            g = graphs.subsample_nodes(g, args.n_sub, seed=args.graph_seed)
        return g
    if args.ba:
        n, m = (int(v) for v in args.ba.split(","))
        return graphs.generate_ba(n, m, seed=args.graph_seed)
    if args.ws:
        n, k, p = args.ws.split(",")
        return graphs.generate_ws(int(n), int(k), float(p), seed=args.graph_seed)
    raise SystemExit("one of --graph-file, --ba, --ws is required")


def cmd_gen_graph(args):
    g = _build_graph(args)
    labels = g.labels or tuple(str(i) for i in range(g.n))
    lines = [f"# family generated nodes={g.n} edges={g.edge_count}"]
    iu, iv = g.edges()
    lines += [f"{labels[u]} {labels[v]}" for u, v in zip(iu.tolist(), iv.tolist())]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bounds(args):
    cal = robust.CalibrationInput(
        n=args.n,
        m_samples=args.m_samples,
        r2=args.r2,
        delta1=args.delta1,
        delta2=args.delta2,
    )
    beta1 = robust.calibrate_gamma1(cal)
    g2 = robust.calibrate_gamma2(cal)
    delta = robust.failure_probability(args.delta1, args.delta2)
    print(f"n = {cal.n}")
    print(f"m_samples = {cal.m_samples}")
    print(f"r2 = {format(cal.r2, '.10g')}")
    print(f"beta1 = {format(beta1, '.10g')}")
    print(f"beta1_integer_part = {int(beta1)}")
    print(f"gamma1_required_above = {format(beta1, '.10g')}")
    print(f"gamma2_bound = {format(g2.value, '.10g')}")
    print(f"gamma2_valid = {'true' if g2.valid else 'false'}")
    print(f"union_delta = {format(delta, '.10g')}")
    return 0


def cmd_solve(args):
    g = _build_graph(args)
    w = args.weights
    if args.probabilities:
        est, evalm = moments.load_probability_csv(args.probabilities, g)
        malicious = []
    else:
        count = max(0, min(int(round(args.malicious_fraction * g.n)), g.n))
        if args.strategic:
            malicious = graphs.greedy_strategic_nodes(g, count)
        else:
            rng = np.random.default_rng(derive_seed(args.seed, "malicious"))
            malicious = sorted(rng.choice(g.n, size=count, replace=False).tolist())
        evalm = moments.simulate_moments(
            g, malicious, seed=derive_seed(args.seed, "eval")
        )
        est = moments.perturb(evalm, args.noise, seed=derive_seed(args.seed, "noise"))

    if args.calibrate:
        m_samples, r2, d1, d2 = (float(v) for v in args.calibrate.split(","))
        cal = robust.CalibrationInput(
            n=g.n, m_samples=int(m_samples), r2=r2, delta1=d1, delta2=d2
        )
        gamma1 = experiments.calibrated_gamma1(cal)
        bound = robust.calibrate_gamma2(cal)
        gamma2 = bound.value * (1.0 + 1e-9) if bound.valid else args.gamma2
    else:
        gamma1, gamma2 = args.gamma1, args.gamma2

    options = conic.SolverOptions(
        eps_abs=args.eps, eps_rel=args.eps, max_iters=args.max_iters
    )
    lm_est = build_matrices(g, est, w)
    sdp, sol = solve_method(g, est, w, args.method, gamma1, gamma2, options)
    decision = decide_from_solution(
        sdp,
        sol,
        args.rounding_trials,
        lambda xb: expected_loss(xb, lm_est),
        seed=derive_seed(args.seed, "round"),
    )
    report = evaluate(
        decision,
        evalm,
        g,
        w,
        samples=args.eval_samples,
        seed=derive_seed(args.seed, "evalsamples"),
    )

    payload = {
        "method": args.method,
        "gamma1": gamma1 if args.method == robust.METHOD_MINT_DRO else None,
        "gamma2": gamma2 if args.method == robust.METHOD_MINT_DRO else None,
        "removed_nodes": sorted(decision.removed_set),
        "x_relaxed": [round(float(v), 10) for v in decision.x_relaxed],
        "objective_relaxed": decision.objective_relaxed,
        "solver_status": sol.status,
        "iterations": sol.iterations,
        "expected_loss_eval": report.expected_loss_eval,
        "interpretable_mean": report.interpretable_mean,
        "malicious_nodes": malicious,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.csv_out:
        row = {
            "seed": args.seed,
            "noise_std": args.noise,
            "method": args.method,
            "expected_loss_eval": report.expected_loss_eval,
            "interpretable_mean": report.interpretable_mean,
            "solver_status": sol.status,
            "iterations": sol.iterations,
            "wall_ms": -1,
            "malicious_nodes": malicious,
            "removed_nodes": sorted(decision.removed_set),
        }
        with open(args.csv_out, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv([row], []))
    return 0


def cmd_experiment(args):
    cfg = load_config(args.config)
    if args.output:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "output": args.output})
    rows, aggregates = experiments.run_experiment(cfg)
    out = cfg.output or "experiment.csv"
    out_dir = os.environ.get("NETPRUNE_OUT_DIR")
    if out_dir:
        out = os.path.join(out_dir, os.path.basename(out))
    write_csv(out, rows, aggregates)
    print(f"wrote {len(rows)} rows + {len(aggregates)} aggregates to {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="netprune",
        description="Decide which suspected-malicious nodes to remove from a network",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_graph_args(p):
        p.add_argument("--graph-file", help="edge-list file")
        p.add_argument("--n-sub", type=int, help="subsample size for edge-list graphs")
        p.add_argument("--ba", help="generate preferential-attachment graph: N,M")
        p.add_argument("--ws", help="generate ring-rewire graph: N,K,P")
        p.add_argument("--graph-seed", type=int, default=0)

    p_gen = sub.add_parser("gen-graph", help="generate a graph and emit its edge list")
    add_graph_args(p_gen)
    p_gen.add_argument("--output")
    p_gen.set_defaults(func=cmd_gen_graph)

    p_bounds = sub.add_parser("bounds", help="calibration report for the ambiguity radii")
    p_bounds.add_argument("--n", type=int, required=True)
    p_bounds.add_argument("--m-samples", type=int, required=True)
    p_bounds.add_argument("--r2", type=float, required=True)
    p_bounds.add_argument("--delta1", type=float, default=0.05)
    p_bounds.add_argument("--delta2", type=float, default=0.05)
    p_bounds.set_defaults(func=cmd_bounds)

    p_solve = sub.add_parser("solve", help="solve one instance and emit the decision")
    add_graph_args(p_solve)
    p_solve.add_argument("--probabilities", help="CSV with node,p_est,p_eval")
    p_solve.add_argument("--malicious-fraction", type=float, default=0.10)
    p_solve.add_argument("--strategic", action="store_true")
    p_solve.add_argument("--noise", type=float, default=0.0)
    p_solve.add_argument(
        "--method",
        choices=[robust.METHOD_MINT, robust.METHOD_MINT_DRO],
        default=robust.METHOD_MINT_DRO,
    )
    p_solve.add_argument("--gamma1", type=float, default=1.0)
    p_solve.add_argument("--gamma2", type=float, default=2.0)
    p_solve.add_argument("--calibrate", help="calibration inputs: M,R2,DELTA1,DELTA2")
    p_solve.add_argument("--weights", type=_parse_weights, default=TradeoffWeights(1 / 3, 1 / 3, 1 / 3))
    p_solve.add_argument("--rounding-trials", type=int, default=100)
    p_solve.add_argument("--eval-samples", type=int, default=1000)
    p_solve.add_argument("--eps", type=float, default=1e-5)
    p_solve.add_argument("--max-iters", type=int, default=50000)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--json-out")
    p_solve.add_argument("--csv-out")
    p_solve.set_defaults(func=cmd_solve)

    p_exp = sub.add_parser("experiment", help="run a configured sweep, emit CSV")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--output")
    p_exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
