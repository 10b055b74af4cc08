import math

import mpmath as mp
import numpy as np
import pytest

from harqthz import (ContourConfig, ConvergenceError, FoxHSpec,
                     bromwich_inverse, fox_h, meijer_g_0M_MM,
                     upper_incomplete_gamma)
from harqthz.specfun import log_upper_incomplete_gamma

mp.mp.dps = 30


# ---------------------------------------------------------------------------
# configuration invariants
# ---------------------------------------------------------------------------

def test_contour_config_invariants():
    with pytest.raises(ValueError):
        ContourConfig(truncation=0.0)
    with pytest.raises(ValueError):
        ContourConfig(nodes=32)
    with pytest.raises(ValueError):
        ContourConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        ContourConfig(tolerance=0.1)
    cfg = ContourConfig()
    assert cfg.abscissa == -0.5


def test_foxh_spec_invariants():
    with pytest.raises(ValueError):
        FoxHSpec(upper_params=((0.0, -1.0),), lower_params=((0.0, 1.0),),
                 m=1, n=1)
    with pytest.raises(ValueError):
        FoxHSpec(upper_params=(), lower_params=((0.0, 1.0),), m=2, n=0)


# ---------------------------------------------------------------------------
# incomplete gamma, general order
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("a", [2.5, 1.0, 0.3, 0.0, -0.7, -1.0, -2.5, -6.0])
def test_upper_incomplete_gamma_vs_mpmath(a):
    for x in (0.05, 0.5, 2.0, 10.0, 40.0):
        ref = float(mp.gammainc(a, x, mp.inf))
        got = upper_incomplete_gamma(a, x)
        # the downward recurrence for a < 0 costs a couple of digits
        assert got == pytest.approx(ref, rel=1e-8, abs=1e-300)


def test_upper_incomplete_gamma_array():
    x = np.array([0.1, 1.0, 5.0])
    got = upper_incomplete_gamma(-1.5, x)
    ref = [float(mp.gammainc(-1.5, v, mp.inf)) for v in x]
    assert np.allclose(got, ref, rtol=1e-10)


def test_upper_incomplete_gamma_pole_at_zero():
    with pytest.raises(ValueError):
        upper_incomplete_gamma(-1.0, 0.0)
    with pytest.raises(ValueError):
        upper_incomplete_gamma(0.0, np.array([1.0, 0.0]))


@pytest.mark.parametrize("a", [1.0, 0.5, -0.5, -3.2, 4.0])
def test_log_upper_incomplete_gamma_deep_tail(a):
    # values far below the double-precision underflow threshold
    for x in (5.0, 80.0, 300.0, 900.0):
        ref = float(mp.log(mp.gammainc(a, x, mp.inf)))
        got = log_upper_incomplete_gamma(a, x)
        assert got == pytest.approx(ref, rel=1e-10, abs=1e-9)


# ---------------------------------------------------------------------------
# Fox H reductions with elementary closed forms
# ---------------------------------------------------------------------------

def test_fox_h_exponential_reduction():
    spec = FoxHSpec(upper_params=(), lower_params=((0.0, 1.0),), m=1, n=0)
    for z in (0.3, 1.0, 4.0):
        got = fox_h(spec, z)
        assert complex(got).real == pytest.approx(math.exp(-z), rel=1e-8)
        assert abs(complex(got).imag) < 1e-10


def test_fox_h_binomial_reduction_both_methods():
    # H^{1,1}_{1,1}[z | (1-a,1); (0,1)] = Gamma(a) (1+z)^{-a}
    a = 1.5
    spec = FoxHSpec(upper_params=((1.0 - a, 1.0),),
                    lower_params=((0.0, 1.0),), m=1, n=1)
    for z in (0.2, 0.7):
        ref = math.gamma(a) * (1.0 + z) ** (-a)
        for method in ("contour", "residue-left", "auto"):
            got = complex(fox_h(spec, z, method=method))
            assert got.real == pytest.approx(ref, rel=1e-7)


def test_fox_h_rejects_nonpositive_argument():
    spec = FoxHSpec(upper_params=(), lower_params=((0.0, 1.0),), m=1, n=0)
    with pytest.raises(ValueError):
        fox_h(spec, 0.0)


# ---------------------------------------------------------------------------
# the specific Meijer G of the high-SNR asymptote
# ---------------------------------------------------------------------------

def test_meijer_g_zero_below_unit_argument():
    assert meijer_g_0M_MM(1.0, 3, 0.5) == 0.0
    assert meijer_g_0M_MM(0.8, 2, 1.0) == 0.0


@pytest.mark.parametrize("theta_half,M", [(0.8, 1), (0.8, 2), (1.3, 3)])
def test_meijer_g_vs_mpmath(theta_half, M):
    for z in (2.0, 10.0, 1000.0):
        ref = float(mp.meijerg([[1.0 + theta_half] * M, []],
                               [[], [0.0] + [1.0] * (M - 1)], z))
        got = meijer_g_0M_MM(theta_half, M, z)
        assert got == pytest.approx(ref, rel=1e-8)


def test_meijer_g_integer_order_closed_form():
    # for theta_half = 1 the kernel collapses to z^s / (s (s-1)^M), so the
    # value is (-1)^M plus the order-M residue at s = 1
    for M in (2, 4, 6):
        for z in (2.0 ** 10, 2.0 ** 40):
            f = lambda s: mp.e ** (s * mp.log(z)) / s
            ref = float((-1.0) ** M
                        + mp.diff(f, mp.mpf(1), M - 1) / mp.factorial(M - 1))
            got = meijer_g_0M_MM(1.0, M, z)
            assert got == pytest.approx(ref, rel=1e-9)


# ---------------------------------------------------------------------------
# Bromwich inversion
# ---------------------------------------------------------------------------

def test_bromwich_recovers_erlang_cdf():
    # Z ~ Erlang(3, lam); transform(t) = MGF(t ln2) / (-t) inverts to the
    # CDF.  (Shapes >= 3 give the fast-decaying transforms this half-line
    # rule is built for; shape-1 transforms decay too slowly to truncate.)
    from scipy import stats
    lam = 1.7
    ln2 = math.log(2.0)

    def transform(t):
        return (lam / (lam - t * ln2)) ** 3 / (-t)

    for x in (0.2, 1.0, 3.0):
        got = bromwich_inverse(transform, x)
        assert got == pytest.approx(stats.erlang.cdf(x * lam, 3), abs=1e-8)


def test_bromwich_gamma_sum_cdf():
    # sum of 3 iid Exp(1) variables (Erlang-3)
    ln2 = math.log(2.0)

    def transform(t):
        return (1.0 / (1.0 - t * ln2)) ** 3 / (-t)

    from scipy import stats
    for x in (0.5, 2.0, 6.0):
        got = bromwich_inverse(transform, x)
        assert got == pytest.approx(stats.erlang.cdf(x, 3), abs=1e-8)


def test_bromwich_error_estimate_returned():
    ln2 = math.log(2.0)

    def transform(t):
        return (1.0 / (1.0 - t * ln2)) ** 3 / (-t)

    from scipy import stats
    val, err = bromwich_inverse(transform, 1.0, return_error=True)
    assert err < 1e-8
    assert val == pytest.approx(stats.erlang.cdf(1.0, 3), abs=1e-8)


def test_bromwich_requires_negative_abscissa():
    with pytest.raises(ValueError):
        bromwich_inverse(lambda t: 1.0 / (-t), 1.0,
                         ContourConfig(abscissa=0.5))
