"""Episode-level HARQ-IR wiretap simulator.

Serves as the independent empirical oracle for every analytic metric:
connection outage, round-count distribution, secrecy outage at the
stopping round, and renewal-reward throughput.  Episodes are simulated in
vectorized chunks; reproducibility is exact for a fixed (master_seed,
workers) pair because each worker draws from its own spawned stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate, stats

from .outage_analytic import HarqConfig
from .thz_channel import PointingFadingParams, pf_density, sample_channel_gain

_CHUNK = 200_000


@dataclass(frozen=True)
class EpisodeOutcome:
    rounds_used: int
    bob_decoded: bool
    eve_intercepted: bool


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    half_width_95: float
    n: int


@dataclass(frozen=True)
class MonteCarloReport:
    p_co: EstimateWithCI
    p_so: EstimateWithCI
    ltat: EstimateWithCI
    expected_rounds: EstimateWithCI
    pmf: tuple  # EstimateWithCI per round count


def run_episode(cfg: HarqConfig, stream: np.random.Generator
                ) -> EpisodeOutcome:
    """One HARQ cycle: accumulate both receivers' mutual information round
    by round, stop when the legitimate side reaches the main rate or the
    round budget is exhausted; the eavesdropper is scored at the stopping
    round."""
    acc_b = 0.0
    acc_e = 0.0
    rounds = cfg.max_rounds
    decoded = False
    for m in range(1, cfg.max_rounds + 1):
        rho = cfg.per_round_snr[m - 1]
        xb = sample_channel_gain(cfg.bob, stream)
        xe = sample_channel_gain(cfg.eve, stream)
        acc_b += math.log2(1.0 + rho * (cfg.bob.h_l * xb) ** 2)
        acc_e += math.log2(1.0 + rho * (cfg.eve.h_l * xe) ** 2)
        if acc_b >= cfg.main_rate:
            rounds = m
            decoded = True
            break
    intercepted = acc_e > cfg.main_rate - cfg.secrecy_rate
    return EpisodeOutcome(rounds_used=rounds, bob_decoded=decoded,
                          eve_intercepted=intercepted)


def _simulate_chunk(cfg: HarqConfig, n: int, stream: np.random.Generator):
    """Vectorized batch of n episodes; returns per-episode rounds_used,
    bob_decoded, eve_intercepted arrays."""
    big_m = cfg.max_rounds
    rho = np.asarray(cfg.per_round_snr)
    xb = sample_channel_gain(cfg.bob, stream, size=(n, big_m))
    xe = sample_channel_gain(cfg.eve, stream, size=(n, big_m))
    mi_b = np.log2(1.0 + rho * (cfg.bob.h_l * xb) ** 2)
    mi_e = np.log2(1.0 + rho * (cfg.eve.h_l * xe) ** 2)
    cum_b = np.cumsum(mi_b, axis=1)
    cum_e = np.cumsum(mi_e, axis=1)
    reached = cum_b >= cfg.main_rate
    decoded = reached.any(axis=1)
    rounds = np.where(decoded, reached.argmax(axis=1) + 1, big_m)
    eve_at_stop = cum_e[np.arange(n), rounds - 1]
    intercepted = eve_at_stop > (cfg.main_rate - cfg.secrecy_rate)
    return rounds, decoded, intercepted


def estimate_metrics(cfg: HarqConfig, n_episodes: int, master_seed: int,
                     workers: int = 1, episode_log=None) -> MonteCarloReport:
    """Empirical counterparts of the analytic report.

    Deterministic for fixed (master_seed, workers): worker w simulates a
    fixed share of the episodes from stream SeedSequence(master_seed).spawn
    index w.  Throughput is the renewal-reward ratio Rs * successes /
    total rounds with a delta-method confidence interval.

    episode_log, if given, is a path that receives one CSV row per episode
    (episode_id, rounds_used, bob_decoded, eve_intercepted) so every
    estimate can be recomputed offline.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    log_fh = open(episode_log, "w") if episode_log is not None else None
    if log_fh is not None:
        log_fh.write("episode_id,rounds_used,bob_decoded,eve_intercepted\n")
    episode_id = 0
    seeds = np.random.SeedSequence(master_seed).spawn(workers)
    shares = [n_episodes // workers] * workers
    shares[-1] += n_episodes - sum(shares)

    big_m = cfg.max_rounds
    n_co = 0
    n_so = 0
    pmf_counts = np.zeros(big_m, dtype=np.int64)
    sum_r = 0.0
    sum_r2 = 0.0
    sum_s = 0.0
    sum_sr = 0.0

    for seed, share in zip(seeds, shares):
        stream = np.random.default_rng(seed)
        done = 0
        while done < share:
            n = min(_CHUNK, share - done)
            rounds, decoded, intercepted = _simulate_chunk(cfg, n, stream)
            n_co += int(np.count_nonzero(~decoded))
            n_so += int(np.count_nonzero(intercepted))
            pmf_counts += np.bincount(rounds - 1, minlength=big_m)
            r = rounds.astype(float)
            s = decoded.astype(float)
            sum_r += r.sum()
            sum_r2 += (r * r).sum()
            sum_s += s.sum()
            sum_sr += (s * r).sum()
            if log_fh is not None:
                log_fh.writelines(
                    "%d,%d,%d,%d\n" % (episode_id + i, rounds[i],
                                       int(decoded[i]), int(intercepted[i]))
                    for i in range(n))
            episode_id += n
            done += n

    if log_fh is not None:
        log_fh.close()

    n = n_episodes

    def binom(k):
        p = k / n
        return EstimateWithCI(p, 1.96 * math.sqrt(max(p * (1 - p), 0.0) / n), n)

    mean_r = sum_r / n
    var_r = max(sum_r2 / n - mean_r ** 2, 0.0)
    rounds_ci = EstimateWithCI(mean_r, 1.96 * math.sqrt(var_r / n), n)

    # ratio estimator eta = Rs * sum(s) / sum(r); delta method:
    # var(eta_hat) ~ Rs^2 / (n mean_r^2) * E[(s - q r)^2], q = sum_s/sum_r
    q = sum_s / sum_r
    mean_s = sum_s / n
    var_s = max(mean_s - mean_s ** 2, 0.0)  # s is Bernoulli
    cov_sr = sum_sr / n - mean_s * mean_r
    resid_var = max(var_s - 2.0 * q * cov_sr + q * q * var_r, 0.0)
    eta = cfg.secrecy_rate * q
    eta_hw = 1.96 * cfg.secrecy_rate * math.sqrt(resid_var / n) / mean_r
    ltat_ci = EstimateWithCI(eta, eta_hw, n)

    pmf = tuple(binom(int(k)) for k in pmf_counts)
    return MonteCarloReport(p_co=binom(n_co), p_so=binom(n_so),
                            ltat=ltat_ci, expected_rounds=rounds_ci, pmf=pmf)


def validate_sampler(params: PointingFadingParams, n: int,
                     stream: np.random.Generator,
                     density_params: PointingFadingParams = None):
    """Two-sided Kolmogorov-Smirnov test of the constructive sampler
    against the CDF obtained by numerically integrating the density.
    Returns (statistic, p_value).

    `density_params` lets the reference density be evaluated under
    different parameters than the draws, which is how a negative control
    (deliberately corrupted density must be rejected) is run.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dp = params if density_params is None else density_params
    draws = sample_channel_gain(params, stream, size=n)
    hi = max(float(np.max(draws)) * 1.05,
             dp.scale * (30.0 / dp.mu) ** (1.0 / dp.alpha))
    grid = np.linspace(0.0, hi, 600)
    masses = [0.0]
    for a, b in zip(grid[:-1], grid[1:]):
        v, _ = integrate.quad(lambda xv: pf_density(xv, dp), a, b,
                              limit=200)
        masses.append(v)
    cum = np.cumsum(masses)
    cum /= cum[-1]
    cdf = interpolate.PchipInterpolator(grid, cum)
    result = stats.kstest(draws, lambda q: np.clip(cdf(q), 0.0, 1.0))
    return result.statistic, result.pvalue
