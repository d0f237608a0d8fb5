import numpy as np
import pytest

from ergmkit import Edges, ModelSpec, Network, Triangles
from ergmkit.exact import build_table, exact_mle, log_likelihood
from ergmkit.mcmle import (
    McmleConfig,
    McmleStatus,
    _inner_maximize,
    approx_loglik_diff,
    degeneracy_check,
    integrated_autocorr_time,
    mcmle_fit,
    moment_check,
)
from ergmkit.sampler import SampleBatch, SamplerConfig, sample
from ergmkit.seeding import generator
from ergmkit.stats import stat_vector

from conftest import random_network


def _batch_at(spec, theta, n, seed, size=2000, burn=500):
    cfg = SamplerConfig(burn_in=burn, interval=max(n * (n - 1) // 2, 1),
                        sample_size=size, seed=seed)
    return sample(spec, np.asarray(theta, dtype=float), Network(n), cfg)


def test_zero_at_theta0(edges_triangles):
    batch = _batch_at(edges_triangles, [-0.5, 0.2], 6, seed=1, size=500)
    t_obs = np.array([7.0, 2.0])
    theta0 = np.array([-0.5, 0.2])
    assert approx_loglik_diff(theta0, theta0, t_obs, batch) == 0.0


def test_shift_invariance(edges_triangles):
    batch = _batch_at(edges_triangles, [-0.5, 0.2], 6, seed=2, size=500)
    t_obs = np.array([7.0, 2.0])
    theta = np.array([-0.4, 0.25])
    theta0 = np.array([-0.5, 0.2])
    base = approx_loglik_diff(theta, theta0, t_obs, batch)
    c = np.array([3.7, -1.2])
    shifted = approx_loglik_diff(theta, theta0, t_obs + c, batch.stats + c)
    assert shifted == pytest.approx(base, abs=1e-9)


def test_matches_exact_loglik_diff_n6(edges_triangles):
    table = build_table(edges_triangles, 6, use_cache=False)
    theta0 = np.array([-1.0, 0.53])
    batch = _batch_at(edges_triangles, theta0, 6, seed=3, size=20_000, burn=1500)
    t_obs = np.array([7.0, 2.0])
    rng = generator(4)
    for _ in range(10):
        theta = theta0 + rng.uniform(-0.1, 0.1, size=2)
        approx = approx_loglik_diff(theta, theta0, t_obs, batch)
        exact = (log_likelihood(table, theta, t_obs)
                 - log_likelihood(table, theta0, t_obs))
        assert approx == pytest.approx(exact, abs=0.02)


def test_inner_maximizer_gradient_norm(edges_triangles):
    batch = _batch_at(edges_triangles, [-0.6, 0.3], 7, seed=5, size=4000)
    t_obs = batch.stats.mean(axis=0) + np.array([0.5, 0.2])
    dtheta, w = _inner_maximize(batch.stats, t_obs, bound=10.0)
    assert np.abs(dtheta).max() < 10.0  # interior optimum
    logw = batch.stats @ dtheta
    logw -= logw.max()
    wn = np.exp(logw)
    wn /= wn.sum()
    grad = t_obs - wn @ batch.stats
    assert np.abs(grad).max() <= 1e-6


def test_degeneracy_flags_empty_batch():
    stats = np.zeros((100, 1))
    batch = SampleBatch(stats=stats, edge_counts=np.zeros(100, dtype=np.int64),
                        final_network=Network(9), acceptance_rate=0.0)
    flags = degeneracy_check(batch, 9)
    assert flags.flagged and flags.boundary_mass and flags.singular_covariance


def test_degeneracy_not_flagged_at_uniform(edges_triangles):
    batch = _batch_at(edges_triangles, [0.0, 0.0], 9, seed=6, size=400)
    flags = degeneracy_check(batch, 9)
    assert not flags.flagged


def test_degeneracy_flagged_at_high_triangle_weight(edges_triangles):
    # strong triangle coefficient drives the chain to complete graphs
    batch = _batch_at(edges_triangles, [-1.0, 2.0], 9, seed=7, size=400, burn=2000)
    flags = degeneracy_check(batch, 9)
    assert flags.flagged


def test_degeneracy_sparse_observed_density():
    rng = np.random.default_rng(0)
    edge_counts = rng.integers(480, 560, size=100).astype(np.int64)
    stats = np.column_stack([edge_counts.astype(float),
                             rng.normal(145, 3, 100)])
    batch = SampleBatch(stats=stats, edge_counts=edge_counts,
                        final_network=Network(418), acceptance_rate=0.5)
    # literal 1% density bound would flag this healthy sparse batch
    assert degeneracy_check(batch, 418).flagged
    assert not degeneracy_check(batch, 418, observed_density=519 / 87153).flagged


def test_moment_check_zero_on_own_mean(edges_triangles):
    cfg = SamplerConfig(burn_in=500, interval=21, sample_size=800, seed=8)
    batch = sample(edges_triangles, np.array([-0.6, 0.3]), Network(7), cfg)
    t_obs = batch.stats.mean(axis=0)
    # same config and start network reproduces the identical batch
    z = moment_check(edges_triangles, np.array([-0.6, 0.3]), t_obs, cfg,
                     start=Network(7))
    assert np.allclose(z, 0.0, atol=1e-9)


def test_moment_check_at_exact_mle(edges_triangles, table7):
    t_obs = np.array([10.0, 3.0])
    res = exact_mle(table7, t_obs)
    cfg = SamplerConfig(burn_in=840, interval=21, sample_size=10_000, seed=9)
    z = moment_check(edges_triangles, res.theta, t_obs, cfg, n=7)
    assert np.all(np.abs(z) <= 3.0)


def test_moment_check_far_from_mle(edges_triangles):
    # theta=0 when the target is interior but far: big standardized gaps
    t_obs = np.array([18.0, 13.0])
    cfg = SamplerConfig(burn_in=840, interval=36, sample_size=2000, seed=10)
    z = moment_check(edges_triangles, np.zeros(2), t_obs, cfg, n=9)
    assert np.any(np.abs(z) > 3.0)


def test_moment_check_needs_start_or_n(edges_triangles):
    cfg = SamplerConfig(burn_in=10, interval=1, sample_size=10, seed=0)
    with pytest.raises(ValueError):
        moment_check(edges_triangles, np.zeros(2), np.zeros(2), cfg)


def test_mcmle_fixed_point_at_exact_mle(edges_triangles, table7):
    rng = generator(12)
    net = random_network(7, rng)
    t_obs = stat_vector(edges_triangles, net)
    res_exact = exact_mle(table7, t_obs)
    assert res_exact.exists
    scfg = SamplerConfig(burn_in=840, interval=42, sample_size=8000, seed=13)
    mcfg = McmleConfig(sampler=scfg, seed=14, max_outer_iterations=10)
    res = mcmle_fit(edges_triangles, net, res_exact.theta, mcfg)
    assert res.status is McmleStatus.CONVERGED
    assert res.outer_iterations <= 2
    assert np.allclose(res.theta, res_exact.theta, atol=1e-12)


def test_mcmle_records_degeneracy_not_crash(edges_triangles):
    # an extreme starting value sends the sampler to the boundary; the
    # harness must record Degenerate rather than raise
    rng = generator(15)
    net = random_network(9, rng)
    scfg = SamplerConfig(burn_in=360, interval=36, sample_size=400, seed=16)
    mcfg = McmleConfig(sampler=scfg, seed=17, max_outer_iterations=5)
    res = mcmle_fit(edges_triangles, net, np.array([-1.0, 3.0]), mcfg)
    assert res.status is McmleStatus.DEGENERATE
    assert res.outer_iterations >= 1
    assert len(res.trace) == res.outer_iterations


def test_mcmle_validates_theta0(edges_triangles):
    scfg = SamplerConfig(burn_in=10, interval=1, sample_size=10, seed=0)
    mcfg = McmleConfig(sampler=scfg)
    with pytest.raises(ValueError):
        mcmle_fit(edges_triangles, Network(5), np.array([np.nan, 0.0]), mcfg)
    with pytest.raises(ValueError):
        mcmle_fit(edges_triangles, Network(5), np.zeros(3), mcfg)


def test_config_validation():
    scfg = SamplerConfig(burn_in=10, interval=1, sample_size=10, seed=0)
    with pytest.raises(ValueError):
        McmleConfig(sampler=scfg, max_outer_iterations=0)
    with pytest.raises(ValueError):
        McmleConfig(sampler=scfg, step_bound=0.0)


def test_mcmle_deterministic_under_fixed_seed(edges_triangles):
    rng = generator(31)
    net = random_network(7, rng)
    theta0 = np.array([-0.5, 0.2])
    scfg = SamplerConfig(burn_in=210, interval=21, sample_size=1500, seed=0)
    mcfg = McmleConfig(sampler=scfg, seed=33, max_outer_iterations=8)
    r1 = mcmle_fit(edges_triangles, net, theta0, mcfg)
    r2 = mcmle_fit(edges_triangles, net, theta0, mcfg)
    assert r1.status is r2.status
    assert np.array_equal(r1.theta, r2.theta)
    assert np.array_equal(r1.final_moment_z, r2.final_moment_z)
    assert r1.outer_iterations == r2.outer_iterations


def test_autocorr_time_white_noise():
    rng = generator(18)
    x = rng.normal(size=4000)
    tau = integrated_autocorr_time(x)
    assert 0.8 <= tau <= 1.6
    # strongly autocorrelated chain has tau >> 1
    y = np.cumsum(rng.normal(size=4000) * 0.05) + rng.normal(size=4000) * 0.01
    assert integrated_autocorr_time(y) > 10
