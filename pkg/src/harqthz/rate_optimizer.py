"""Robust rate adaptation: maximize the long-term secrecy throughput over
the rate pair (R0, Rs) subject to connection- and secrecy-outage ceilings.

Constraints are checked with the conservative surrogates (asymptotic
connection outage, Chernoff/asymptotic secrecy approximation), so a
feasible point is feasible in the worst-case sense; the objective at
surviving candidates is the exact throughput.  Search is a coarse grid
followed by shrinking local refinements.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .outage_analytic import (HarqConfig, ltat, mi_cdf_asymptotic,
                              secrecy_outage)
from .specfun import ConvergenceError


@dataclass(frozen=True)
class RateConstraints:
    """Outage ceilings: eps_c for the connection outage, eps_e for the
    secrecy outage."""
    eps_c: float
    eps_e: float

    def __post_init__(self):
        if not (0.0 < self.eps_c < 1.0 and 0.0 < self.eps_e < 1.0):
            raise ValueError("eps_c and eps_e must lie in (0, 1)")


@dataclass(frozen=True)
class SearchGrid:
    """Grid specification: R0 ranges over (0, r0_max] in coarse_step
    increments, Rs over (0, R0); each refinement pass shrinks the step by
    shrink_factor around the incumbent."""
    r0_max: float = 12.0
    coarse_step: float = 0.25
    refinements: int = 3
    shrink_factor: float = 4.0

    def __post_init__(self):
        if self.r0_max <= 0 or self.coarse_step <= 0:
            raise ValueError("r0_max and coarse_step must be positive")
        if self.coarse_step >= self.r0_max:
            raise ValueError("coarse_step must be smaller than r0_max")
        if self.refinements < 0 or self.shrink_factor <= 1:
            raise ValueError("need refinements >= 0 and shrink_factor > 1")


@dataclass(frozen=True)
class OptimizationResult:
    r0_star: float
    rs_star: float
    eta_star: float
    slack_c: float
    slack_e: float
    feasible: bool
    evaluations: int


def _with_rates(cfg_template: HarqConfig, r0: float, rs: float) -> HarqConfig:
    return dataclasses.replace(cfg_template, main_rate=r0, secrecy_rate=rs)


def check_feasibility(r0: float, rs: float, cfg_template: HarqConfig,
                      constraints: RateConstraints):
    """Constraint slacks at one rate pair using the worst-case surrogates.
    Returns (feasible, slack_c, slack_e)."""
    if not (0.0 < rs < r0):
        raise ValueError("require 0 < rs < r0")
    cfg = _with_rates(cfg_template, r0, rs)
    p_co = min(mi_cdf_asymptotic("bob", cfg.max_rounds, r0, cfg), 1.0)
    p_so = secrecy_outage(cfg, method="approx")
    slack_c = constraints.eps_c - p_co
    slack_e = constraints.eps_e - p_so
    return (slack_c >= 0.0 and slack_e >= 0.0), slack_c, slack_e


def _exact_eta(cfg_template: HarqConfig, r0: float, rs: float) -> float:
    eta, _ = ltat(_with_rates(cfg_template, r0, rs), method="exact")
    return eta


def optimize_rates(cfg_template: HarqConfig, constraints: RateConstraints,
                   search: SearchGrid = SearchGrid()) -> OptimizationResult:
    """Grid-plus-refinement maximization of the exact throughput under the
    surrogate outage constraints.

    cfg_template supplies everything except the rate pair (its main_rate /
    secrecy_rate fields are placeholders and are overwritten).  Tie-breaks
    prefer smaller R0, then larger Rs.  When nothing is feasible the result
    carries the least-violating grid point with feasible=False.
    """
    if not cfg_template.uniform_power:
        raise ValueError("the secrecy surrogate assumes uniform per-round SNR")

    evaluations = 0
    failures = 0
    best = None            # (eta, r0, rs, slack_c, slack_e)
    least_bad = None       # (violation, r0, rs, slack_c, slack_e)

    def consider(r0, rs):
        nonlocal evaluations, failures, best, least_bad
        evaluations += 1
        try:
            ok, sc, se = check_feasibility(r0, rs, cfg_template, constraints)
        except (ConvergenceError, ValueError):
            failures += 1
            return
        if not ok:
            violation = max(-sc, 0.0) + max(-se, 0.0)
            if least_bad is None or violation < least_bad[0]:
                least_bad = (violation, r0, rs, sc, se)
            return
        try:
            eta = _exact_eta(cfg_template, r0, rs)
        except ConvergenceError:
            failures += 1
            return
        if (best is None or eta > best[0] + 1e-12
                or (abs(eta - best[0]) <= 1e-12
                    and (r0 < best[1] - 1e-12
                         or (abs(r0 - best[1]) <= 1e-12 and rs > best[2])))):
            best = (eta, r0, rs, sc, se)

    step = search.coarse_step
    n0 = int(search.r0_max / step)
    for i in range(1, n0 + 1):
        r0 = i * step
        for j in range(1, i):
            consider(r0, j * step)

    for _ in range(search.refinements):
        if best is None:
            break
        prev = step
        step = prev / search.shrink_factor
        _, r0_c, rs_c = best[0], best[1], best[2]
        r0_lo, r0_hi = max(step, r0_c - prev), min(search.r0_max, r0_c + prev)
        k = 0
        r0 = r0_lo
        while r0 <= r0_hi + 1e-12:
            rs_lo, rs_hi = max(step, rs_c - prev), rs_c + prev
            rs = rs_lo
            while rs <= rs_hi + 1e-12:
                if rs < r0 - 1e-12 and (abs(r0 - r0_c) > 1e-12
                                        or abs(rs - rs_c) > 1e-12):
                    consider(r0, rs)
                rs += step
            r0 += step
            k += 1

    if best is None:
        if least_bad is None:
            return OptimizationResult(0.0, 0.0, 0.0, float("-inf"),
                                      float("-inf"), False, evaluations)
        _, r0, rs, sc, se = least_bad
        return OptimizationResult(r0, rs, 0.0, sc, se, False, evaluations)
    eta, r0, rs, sc, se = best
    return OptimizationResult(r0, rs, eta, sc, se, True, evaluations)
