import json
import math
import os

import numpy as np
import pytest

import codband


def test_posterior_matches_numpy_ridge():
    d = 3
    sigma = 0.3
    lam = 0.7
    rng = np.random.default_rng(0)
    post = codband.LinearPosterior(d, lam, sigma)
    xs, rs = [], []
    for _ in range(25):
        x = rng.normal(size=d)
        x /= max(1.0, np.linalg.norm(x))
        r = float(rng.normal())
        xs.append(x)
        rs.append(r)
        post.absorb(x, r)
    X = np.array(xs)
    precision = lam * np.eye(d) + X.T @ X / sigma**2
    moment = X.T @ np.array(rs) / sigma**2
    np.testing.assert_allclose(post.precision, precision, rtol=1e-10)
    np.testing.assert_allclose(post.mean, np.linalg.solve(precision, moment),
                               rtol=1e-10)
    assert post.n_obs == 25


def test_detector_constants():
    config = codband.DetectorConfig()
    config.delta1 = 0.05
    config.delta2 = 0.05
    config.window = 50
    config.noise_sd = 0.1
    config.validate()
    assert math.isclose(codband.epsilon(config), 0.1959964, rel_tol=1e-4)
    assert math.isclose(config.threshold(), 0.22309, rel_tol=1e-3)
    assert codband.recommended_tau(0.5, config) == 41


def test_pool_sampling_and_gibbs():
    pool = codband.ModelPool(2, 1.0, 0.2, alpha0=1.0)
    rng = codband.Rng(5)
    w = pool.crp_prior_weights()
    assert list(w.probs) == [1.0]
    key = pool.sample_prior_model(rng)
    assert key == 1
    data = [codband.Observation(np.array([0.9, 0.0]), 0.9),
            codband.Observation(np.array([0.0, 0.9]), 0.1)]
    for obs in data:
        pool.absorb_into(key, obs.x, obs.reward)
    new_key = pool.gibbs_reassign(key, data, rng)
    assert pool.total_observations() == 2
    assert pool.model(new_key).assign_count == 1
    assert pool.resample_alpha0(1, rng) > 0.0


def test_policy_round_trip():
    config = codband.PolicyConfig()
    config.dim = 2
    config.noise_sd = 0.1
    rng = codband.Rng(7)
    policy = codband.make_policy("codband", config, rng)
    candidates = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    decision = policy.choose(0, candidates, rng)
    assert decision.arm_index in (0, 1)
    assert decision.model_key == 1
    fb = policy.feedback(0, candidates[decision.arm_index], 0.5, rng)
    assert fb.detected is False


def test_environment_and_replay(tmp_path):
    env = codband.EnvConfig()
    env.n_users = 2
    env.horizon = 30
    env.dim = 3
    env.pool_size = 15
    env.candidates_per_round = 4
    env.s_min = 10
    env.s_max = 20
    env.noise_sd = 0.1
    setting = codband.FixedMixtureSetting()
    setting.k = 2
    env.setting = setting
    rng = codband.Rng(3)
    trace = codband.generate_trace(env, rng)
    assert len(trace.arm_pool) == 15
    out = codband.serve_round(trace, 0, 0, codband.Rng(4))
    assert len(out.candidates) == 4
    assert out.best_expected == pytest.approx(max(out.expected))


def test_run_experiment_dict(tmp_path):
    config = {
        "schema_version": 1,
        "env": {
            "users": 2, "horizon": 25, "dim": 3, "arm_pool": 12,
            "candidates": 4, "s_min": 8, "s_max": 15, "noise_sd": 0.1,
            "setting": "fixed_mixture", "k": 2,
        },
        "policies": ["codband", "linucb"],
        "replications": 2,
        "seed": 11,
        "out_dir": str(tmp_path / "out"),
        "threads": 1,
    }
    manifest = codband.run_experiment(config)
    regret_csv = os.path.join(config["out_dir"], "regret.csv")
    assert os.path.exists(regret_csv)
    assert manifest["replications"] == 2
    assert {p["name"] for p in manifest["policies"]} == {"codband", "linucb"}
    with open(regret_csv) as f:
        first = f.read()

    config["out_dir"] = str(tmp_path / "out2")
    codband.run_experiment(config)
    with open(os.path.join(config["out_dir"], "regret.csv")) as f:
        assert f.read() == first

    with pytest.raises(Exception, match="unknown key"):
        bad = dict(config)
        bad["nope"] = 1
        codband.run_experiment(bad)


def test_gen_log_and_replay_dict(tmp_path):
    config = {
        "schema_version": 1,
        "env": {
            "users": 2, "horizon": 40, "dim": 3, "arm_pool": 12,
            "candidates": 4, "s_min": 10, "s_max": 20, "noise_sd": 0.1,
            "setting": "stationary", "k": 1,
        },
        "policies": ["linucb"],
        "replications": 1,
        "seed": 21,
        "out_dir": str(tmp_path / "replay"),
    }
    log_path = codband.generate_event_log(config, 60)
    records = codband.read_event_log(log_path)
    assert len(records) == 60
    manifest = codband.run_replay(config, log_path)
    assert any(a.endswith("replay_summary.csv") for a in manifest["artifacts"])
