import numpy as np
import pytest

from harqthz import (Environment, HarqConfig, LinkConfig, OptimizationResult,
                     RateConstraints, SearchGrid, check_feasibility, ltat,
                     optimize_rates, pointing_fading_params)

ENV = Environment()
BOB = pointing_fading_params(LinkConfig(20.0, 55.0, 55.0), ENV)
# a strongly disadvantaged eavesdropper so the constrained problem has a
# nonempty feasible region inside a small search box
EVE_FAR = pointing_fading_params(LinkConfig(100.0, 55.0, 30.0), ENV)
EVE_NEAR = pointing_fading_params(LinkConfig(40.0, 55.0, 50.0), ENV)


def template(big_m, snr_dB, eve):
    rho = 10.0 ** (snr_dB / 10.0)
    return HarqConfig(max_rounds=big_m, main_rate=1.0, secrecy_rate=0.5,
                      per_round_snr=tuple([rho] * big_m), bob=BOB, eve=eve)


def test_constraint_invariants():
    with pytest.raises(ValueError):
        RateConstraints(eps_c=0.0, eps_e=0.01)
    with pytest.raises(ValueError):
        RateConstraints(eps_c=0.01, eps_e=1.0)
    with pytest.raises(ValueError):
        SearchGrid(r0_max=0.0)
    with pytest.raises(ValueError):
        SearchGrid(coarse_step=20.0)


def test_check_feasibility_reports_slacks():
    tpl = template(2, 45.0, EVE_FAR)
    cons = RateConstraints(eps_c=0.1, eps_e=0.1)
    ok, sc, se = check_feasibility(4.0, 3.0, tpl, cons)
    assert ok
    assert sc >= 0.0 and se >= 0.0
    strong_eve = template(2, 45.0, EVE_NEAR)
    bad, sc, se = check_feasibility(11.0, 0.5, strong_eve, cons)
    assert not bad
    assert min(sc, se) < 0.0


def test_optimizer_finds_feasible_optimum():
    tpl = template(2, 45.0, EVE_FAR)
    cons = RateConstraints(eps_c=0.1, eps_e=0.1)
    grid = SearchGrid(r0_max=12.0, coarse_step=0.5, refinements=3)
    res = optimize_rates(tpl, cons, grid)
    assert res.feasible
    assert 0.0 < res.rs_star < res.r0_star <= 12.0
    assert res.slack_c >= 0.0 and res.slack_e >= 0.0
    assert res.evaluations > 0
    # the reported throughput is the exact objective at the reported rates
    import dataclasses
    at = dataclasses.replace(tpl, main_rate=res.r0_star,
                             secrecy_rate=res.rs_star)
    eta, _ = ltat(at, "exact")
    assert res.eta_star == pytest.approx(eta, rel=1e-12)


def test_optimizer_beats_every_coarse_feasible_point():
    tpl = template(1, 40.0, EVE_FAR)
    cons = RateConstraints(eps_c=0.1, eps_e=0.1)
    grid = SearchGrid(r0_max=8.0, coarse_step=1.0, refinements=2)
    res = optimize_rates(tpl, cons, grid)
    assert res.feasible
    import dataclasses
    for r0 in np.arange(1.0, 8.01, 1.0):
        for rs in np.arange(1.0, r0, 1.0):
            ok, _, _ = check_feasibility(float(r0), float(rs), tpl, cons)
            if not ok:
                continue
            at = dataclasses.replace(tpl, main_rate=float(r0),
                                     secrecy_rate=float(rs))
            eta, _ = ltat(at, "exact")
            assert eta <= res.eta_star + 1e-9


def test_relaxing_budgets_never_hurts():
    tpl = template(2, 45.0, EVE_FAR)
    grid = SearchGrid(r0_max=10.0, coarse_step=1.0, refinements=2)
    tight = optimize_rates(tpl, RateConstraints(0.05, 0.05), grid)
    loose = optimize_rates(tpl, RateConstraints(0.2, 0.2), grid)
    assert loose.eta_star >= tight.eta_star - 1e-12


def test_infeasible_problem_reports_least_violation():
    # the reference eavesdropper geometry leaves no robust-feasible pair
    # inside this box at a 1% budget
    tpl = template(2, 45.0, EVE_NEAR)
    cons = RateConstraints(eps_c=0.01, eps_e=0.01)
    res = optimize_rates(tpl, cons,
                         SearchGrid(r0_max=6.0, coarse_step=1.0,
                                    refinements=1))
    assert not res.feasible
    assert res.eta_star == 0.0
    assert min(res.slack_c, res.slack_e) < 0.0


def test_result_is_deterministic():
    tpl = template(2, 45.0, EVE_FAR)
    cons = RateConstraints(eps_c=0.1, eps_e=0.1)
    grid = SearchGrid(r0_max=10.0, coarse_step=1.0, refinements=2)
    a = optimize_rates(tpl, cons, grid)
    b = optimize_rates(tpl, cons, grid)
    assert a == b
