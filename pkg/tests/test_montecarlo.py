import numpy as np
import pytest

from harqthz import (Environment, HarqConfig, LinkConfig, estimate_metrics,
                     ltat, mi_cdf, pointing_fading_params, run_episode,
                     secrecy_outage, tx_count_pmf, validate_sampler)

ENV = Environment()
BOB = pointing_fading_params(LinkConfig(20.0, 55.0, 55.0), ENV)
EVE = pointing_fading_params(LinkConfig(40.0, 55.0, 50.0), ENV)


def make_cfg(big_m, snr_dB, r0=3.0, rs=2.0):
    rho = 10.0 ** (snr_dB / 10.0)
    return HarqConfig(max_rounds=big_m, main_rate=r0, secrecy_rate=rs,
                      per_round_snr=tuple([rho] * big_m), bob=BOB, eve=EVE)


def test_run_episode_basic_shape():
    cfg = make_cfg(3, 35.0)
    rng = np.random.default_rng(5)
    out = run_episode(cfg, rng)
    assert 1 <= out.rounds_used <= 3
    assert isinstance(out.bob_decoded, bool)
    assert isinstance(out.eve_intercepted, bool)
    # budget exhausted without decoding keeps rounds at the budget
    assert not out.bob_decoded or out.rounds_used <= 3


def test_scalar_and_vectorized_paths_agree():
    cfg = make_cfg(2, 35.0)
    n = 40_000
    rng = np.random.default_rng(42)
    scalar = [run_episode(cfg, rng) for _ in range(n)]
    p_scalar = sum(not o.bob_decoded for o in scalar) / n
    rep = estimate_metrics(cfg, n, master_seed=42)
    assert abs(rep.p_co.point - p_scalar) < 4.0 * rep.p_co.half_width_95 \
        + 4.0 * 1.96 * np.sqrt(p_scalar * (1 - p_scalar) / n)


def test_estimates_are_deterministic_in_seed():
    cfg = make_cfg(2, 40.0)
    a = estimate_metrics(cfg, 30_000, master_seed=7)
    b = estimate_metrics(cfg, 30_000, master_seed=7)
    assert a == b
    c = estimate_metrics(cfg, 30_000, master_seed=8)
    assert a != c


def test_workers_change_partition_not_distribution():
    cfg = make_cfg(2, 35.0)
    a = estimate_metrics(cfg, 60_000, master_seed=3, workers=1)
    b = estimate_metrics(cfg, 60_000, master_seed=3, workers=3)
    # different streams, statistically compatible results
    assert abs(a.p_so.point - b.p_so.point) <= (a.p_so.half_width_95
                                                + b.p_so.half_width_95)


def test_mc_agrees_with_analytics():
    cfg = make_cfg(2, 35.0)
    rep = estimate_metrics(cfg, 400_000, master_seed=11)
    se = lambda est: est.half_width_95 / 1.96

    pco = mi_cdf("bob", 2, cfg.main_rate, cfg)
    assert abs(rep.p_co.point - pco) <= 3.0 * max(se(rep.p_co), 1e-6)

    pso = secrecy_outage(cfg, "exact")
    assert abs(rep.p_so.point - pso) <= 3.0 * se(rep.p_so)

    eta, rounds = ltat(cfg, "exact")
    assert abs(rep.ltat.point - eta) <= 3.0 * se(rep.ltat)
    assert abs(rep.expected_rounds.point - rounds) <= \
        3.0 * se(rep.expected_rounds)

    pmf = tx_count_pmf(cfg)
    for k in range(2):
        assert abs(rep.pmf[k].point - pmf[k]) <= \
            3.0 * max(se(rep.pmf[k]), 1e-6)


def test_pmf_estimates_sum_to_one():
    cfg = make_cfg(3, 40.0)
    rep = estimate_metrics(cfg, 50_000, master_seed=2)
    assert sum(e.point for e in rep.pmf) == pytest.approx(1.0, abs=1e-12)


def test_validate_sampler_accepts_true_density():
    rng = np.random.default_rng(17)
    stat, pval = validate_sampler(BOB, 30_000, rng)
    assert pval > 0.01
    assert stat < 0.02


def test_validate_sampler_rejects_wrong_shape():
    import dataclasses
    rng = np.random.default_rng(17)
    wrong = dataclasses.replace(BOB, phi=2.0 * BOB.phi)
    stat, pval = validate_sampler(BOB, 30_000, rng, density_params=wrong)
    assert pval < 1e-6


def test_episode_log_reproduces_estimates(tmp_path):
    cfg = make_cfg(2, 40.0)
    path = tmp_path / "episodes.csv"
    rep = estimate_metrics(cfg, 20_000, master_seed=5, workers=2,
                           episode_log=str(path))
    rows = path.read_text().strip().split("\n")
    assert rows[0] == "episode_id,rounds_used,bob_decoded,eve_intercepted"
    data = np.loadtxt(rows[1:], delimiter=",", dtype=np.int64, ndmin=2)
    assert data.shape == (20_000, 4)
    assert list(data[:, 0]) == list(range(20_000))
    assert data[:, 1].min() >= 1 and data[:, 1].max() <= cfg.max_rounds
    p_co = np.mean(data[:, 2] == 0)
    p_so = np.mean(data[:, 3] == 1)
    eta = cfg.secrecy_rate * data[:, 2].sum() / data[:, 1].sum()
    assert p_co == pytest.approx(rep.p_co.point, abs=1e-12)
    assert p_so == pytest.approx(rep.p_so.point, abs=1e-12)
    assert eta == pytest.approx(rep.ltat.point, rel=1e-12)
