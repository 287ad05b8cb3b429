import numpy as np
import pytest

from conftest import all_configurations, config_probabilities, random_graph
from netprune.graphs import Graph
from netprune.moments import (
    EPS_PROB,
    Configuration,
    MomentModel,
    bernoulli_sigma,
    configuration_moments,
    load_probability_csv,
    perturb,
    sample_configuration,
    sample_configuration_matrix,
    simulate_moments,
)


def test_point_mass_betas_give_clipped_indicator(rng):
    g = random_graph(rng, 8)
    model = simulate_moments(
        g, {2, 5}, benign_beta=(1e-6, 1e6), malicious_beta=(1e6, 1e-6), seed=3
    )
    expected = np.full(8, EPS_PROB)
    expected[[2, 5]] = 1.0 - EPS_PROB
    assert np.allclose(model.mu, expected)


def test_empty_malicious_set_uses_benign_beta(rng):
    g = random_graph(rng, 12)
    model = simulate_moments(g, set(), seed=1)
    # Beta(2, 8) mass is concentrated well below 0.8
    assert model.mu.max() < 0.8
    assert model.kind == "evaluation"


def test_simulated_malicious_mean_matches_beta_mean(rng):
    g = random_graph(rng, 10)
    vals = np.empty(10_000)
    for s in range(vals.size):
        vals[s] = simulate_moments(g, {4}, seed=s).mu[4]
    assert abs(vals.mean() - 0.8) <= 0.02


def test_simulate_rejects_degenerate_beta(rng):
    g = random_graph(rng, 4)
    with pytest.raises(ValueError):
        simulate_moments(g, set(), benign_beta=(0.0, 1.0))
    with pytest.raises(ValueError):
        simulate_moments(g, set(), malicious_beta=(1.0, -2.0))


def test_simulate_rejects_bad_node(rng):
    g = random_graph(rng, 4)
    with pytest.raises(ValueError):
        simulate_moments(g, {7})


def test_perturb_zero_noise_is_identity(rng):
    g = random_graph(rng, 9)
    model = simulate_moments(g, {0}, seed=2)
    out = perturb(model, 0.0, seed=99)
    assert np.array_equal(out.mu, model.mu)
    assert out.kind == "estimated"


def test_perturb_symmetric_around_half():
    mu = np.full(4, 0.5)
    model = MomentModel(mu, bernoulli_sigma(mu))
    means = np.empty(10_000)
    for s in range(means.size):
        means[s] = perturb(model, 0.1, seed=s).mu.mean()
    assert abs(means.mean() - 0.5) <= 0.005


def test_perturb_saturates_at_clip_bounds():
    mu = np.full(6, 0.5)
    model = MomentModel(mu, bernoulli_sigma(mu))
    out = perturb(model, 10.0, seed=0)
    assert np.all((out.mu == EPS_PROB) | (out.mu == 1.0 - EPS_PROB))


def test_perturb_rejects_negative_noise(rng):
    model = simulate_moments(random_graph(rng, 3), set(), seed=0)
    with pytest.raises(ValueError):
        perturb(model, -0.1)


def test_configuration_moments_all_benign_certain():
    n = 4
    model = MomentModel(np.zeros(n), np.zeros((n, n)))
    e_pibar, e_pp, e_mp = configuration_moments(model)
    assert np.array_equal(e_pibar, np.ones(n))
    assert np.array_equal(e_pp, np.ones((n, n)))
    assert np.array_equal(e_mp, np.zeros((n, n)))


def test_configuration_moments_all_malicious_certain():
    n = 3
    model = MomentModel(np.ones(n), np.zeros((n, n)))
    e_pibar, e_pp, e_mp = configuration_moments(model)
    assert np.array_equal(e_pibar, np.zeros(n))
    assert np.array_equal(e_pp, np.zeros((n, n)))
    assert np.array_equal(e_mp, np.zeros((n, n)))


def test_configuration_moments_match_enumeration():
    mu = np.array([0.3, 0.7])
    model = MomentModel(mu, np.diag([0.21, 0.21]))
    e_pibar, e_pp, e_mp = configuration_moments(model)
    configs = all_configurations(2)
    probs = config_probabilities(mu, configs)
    pibar = 1.0 - configs
    want_pibar = probs @ pibar
    want_pp = np.einsum("s,si,sj->ij", probs, pibar, pibar)
    want_mp = np.einsum("s,si,sj->ij", probs, configs, pibar)
    assert np.abs(e_pibar - want_pibar).max() <= 1e-12
    assert np.abs(e_pp - want_pp).max() <= 1e-12
    assert np.abs(e_mp - want_mp).max() <= 1e-12


def test_configuration_moments_enumeration_random(rng):
    for _ in range(5):
        n = int(rng.integers(2, 9))
        mu = rng.uniform(0.1, 0.9, n)
        model = MomentModel(mu, np.diag(mu * (1 - mu)))
        e_pibar, e_pp, e_mp = configuration_moments(model)
        configs = all_configurations(n)
        probs = config_probabilities(mu, configs)
        pibar = 1.0 - configs
        assert np.abs(e_pibar - probs @ pibar).max() <= 1e-12
        assert np.abs(e_pp - np.einsum("s,si,sj->ij", probs, pibar, pibar)).max() <= 1e-12
        assert np.abs(e_mp - np.einsum("s,si,sj->ij", probs, configs, pibar)).max() <= 1e-12
        assert np.abs(e_pibar + mu - 1.0).max() <= 1e-15


def test_sample_configuration_extremes():
    zero = MomentModel(np.zeros(3), np.zeros((3, 3)))
    ones = MomentModel(np.ones(3), np.zeros((3, 3)))
    assert np.array_equal(sample_configuration(zero, seed=1).pi, np.zeros(3))
    assert np.array_equal(sample_configuration(ones, seed=1).pi, np.ones(3))


def test_sample_configuration_mean():
    mu = np.full(5, 0.5)
    model = MomentModel(mu, bernoulli_sigma(mu))
    draws = sample_configuration_matrix(model, 10_000, seed=7)
    assert abs(draws.mean() - 0.5) <= 0.01


def test_configuration_complement():
    cfg = Configuration(pi=np.array([1.0, 0.0, 1.0]))
    assert np.array_equal(cfg.pi_bar, np.array([0.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        Configuration(pi=np.array([0.5, 0.0]))


def test_moment_model_validation():
    with pytest.raises(ValueError):
        MomentModel(np.array([1.5]), np.eye(1))
    with pytest.raises(ValueError):
        MomentModel(np.array([0.5, 0.5]), np.array([[1.0, 0.2], [0.3, 1.0]]))
    with pytest.raises(ValueError):
        MomentModel(np.array([0.5]), np.eye(1), kind="other")


def test_probability_csv_roundtrip():
    g = Graph(np.array([[0.0, 1.0], [1.0, 0.0]]), labels=("alice", "bob"))
    text = "node,p_est,p_eval\nalice,0.2,0.3\nbob,0.9,0.8\n"
    est, ev = load_probability_csv(text, g)
    assert np.allclose(est.mu, [0.2, 0.9])
    assert np.allclose(ev.mu, [0.3, 0.8])
    assert est.kind == "estimated"
    assert ev.kind == "evaluation"


def test_probability_csv_errors():
    g = Graph(np.zeros((2, 2)), labels=("a", "b"))
    with pytest.raises(ValueError, match="unknown node"):
        load_probability_csv("node,p_est,p_eval\nzz,0.1,0.1\n", g)
    with pytest.raises(ValueError, match="missing"):
        load_probability_csv("node,p_est,p_eval\na,0.1,0.1\n", g)
    with pytest.raises(ValueError, match="duplicate"):
        load_probability_csv("node,p_est,p_eval\na,0.1,0.1\na,0.2,0.2\nb,0.3,0.3\n", g)
    with pytest.raises(ValueError, match="header"):
        load_probability_csv("node,p\na,0.1\n", g)
