"""Terahertz link model.

Deterministic part: free-space spreading plus molecular absorption (a
two-resonance water-vapor model with a cubic polynomial background).
Random part: a composite channel gain combining alpha-mu small-scale
fading with Gaussian-jitter beam misalignment, exposed as density and
exact sampler so analytic and simulation code paths share one
parameterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .specfun import upper_incomplete_gamma

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class Environment:
    """Atmospheric state feeding the absorption model.

    relative_humidity is a fraction in [0, 1].
    """
    temperature_K: float = 296.0
    relative_humidity: float = 0.5
    pressure_Pa: float = 101_325.0

    def __post_init__(self):
        if self.temperature_K <= 0:
            raise ValueError("temperature_K must be positive")
        if not (0.0 <= self.relative_humidity <= 1.0):
            raise ValueError("relative_humidity must be in [0, 1]")
        if self.pressure_Pa <= 0:
            raise ValueError("pressure_Pa must be positive")


@dataclass(frozen=True)
class AbsorptionConstants:
    """Coefficients of the simplified molecular absorption model.

    q1..q10 shape the two water-vapor resonance terms, c1/c2 are the
    resonance centers as wavenumbers in cm^-1, and j1..j4 are the cubic
    background polynomial coefficients (frequency in Hz).
    """
    q1: float = 0.2205
    q2: float = 0.1303
    q3: float = 0.0294
    q4: float = 0.4093
    q5: float = 0.0925
    q6: float = 2.014
    q7: float = 0.1702
    q8: float = 0.0303
    q9: float = 0.537
    q10: float = 0.0956
    c1_cm_inv: float = 10.835
    c2_cm_inv: float = 12.664
    j1: float = 5.54e-37
    j2: float = -3.94e-25
    j3: float = 9.06e-14
    j4: float = -6.36e-3


DEFAULT_ABSORPTION = AbsorptionConstants()


@dataclass(frozen=True)
class LinkConfig:
    """Geometry, antennas, and fading shape of one transmitter-receiver link."""
    distance_m: float
    tx_gain_dBi: float
    rx_gain_dBi: float
    carrier_Hz: float = 275e9
    aperture_radius_m: float = 0.1
    beam_footprint_m: float = 0.3
    jitter_sigma_m: float = 0.05
    alpha: float = 1.0
    mu: float = 2.0
    hf_hat: float = 1.0

    def __post_init__(self):
        for name in ("distance_m", "carrier_Hz", "aperture_radius_m",
                     "beam_footprint_m", "alpha", "mu", "hf_hat"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.jitter_sigma_m < 0:
            raise ValueError("jitter_sigma_m must be nonnegative")
        if self.jitter_sigma_m == 0:
            raise ValueError(
                "jitter_sigma_m = 0 is degenerate; model no misalignment by "
                "making the footprint-to-jitter ratio large instead")


@dataclass(frozen=True)
class PointingFadingParams:
    """Parameters of the composite misalignment-plus-fading amplitude.

    zeta    aperture-to-beamwidth ratio sqrt(pi) r / (sqrt(2) w)
    S       collected-power fraction at perfect alignment, erf(zeta)^2
    phi     beam-to-jitter shape, w^2 sqrt(pi) erf(zeta) e^{zeta^2} /
            (8 zeta sigma^2)
    h_l     deterministic path gain of the link (amplitude)
    """
    zeta: float
    S: float
    phi: float
    alpha: float
    mu: float
    hf_hat: float
    h_l: float

    def __post_init__(self):
        for name in ("zeta", "phi", "alpha", "mu", "hf_hat", "h_l"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.S <= 1.0):
            raise ValueError("S must lie in (0, 1]")

    @property
    def theta(self) -> float:
        """Diversity-controlling exponent min(alpha*mu, phi)."""
        return min(self.alpha * self.mu, self.phi)

    @property
    def scale(self) -> float:
        """Amplitude scale S * hf_hat entering the distribution."""
        return self.S * self.hf_hat


def saturated_vapor_pressure(env: Environment) -> float:
    """Saturation water-vapor partial pressure in Pa.

    Buck (1996) fit over liquid water with the weak total-pressure
    enhancement factor.  Valid for roughly 200-350 K.
    """
    if not (200.0 <= env.temperature_K <= 350.0):
        raise ValueError("temperature outside the 200-350 K validity range")
    t = env.temperature_K - 273.15
    es = 611.21 * math.exp((18.678 - t / 234.5) * t / (257.14 + t))
    enhancement = 1.0007 + 3.46e-8 * env.pressure_Pa
    return enhancement * es


def water_vapor_mixing_ratio(env: Environment) -> float:
    pw = saturated_vapor_pressure(env)
    return env.relative_humidity * pw / env.pressure_Pa


def absorption_coefficient(carrier_Hz: float, env: Environment,
                           constants: AbsorptionConstants = DEFAULT_ABSORPTION
                           ) -> float:
    """Molecular absorption coefficient kappa in m^-1.

    Two water-vapor resonance terms plus the cubic background.  The cubic
    fit dips slightly negative near the low end of its validity window, so
    the total is clamped at zero (absorption cannot amplify).
    """
    if not (100e9 <= carrier_Hz <= 450e9):
        raise ValueError("carrier frequency outside the 100-450 GHz model range")
    v = water_vapor_mixing_ratio(env)
    k = constants
    wn = carrier_Hz / (100.0 * SPEED_OF_LIGHT)  # wavenumber, cm^-1
    k1 = k.q1 * v * (k.q2 * v + k.q3) / (
        (k.q4 * v + k.q5) ** 2 + (wn - k.c1_cm_inv) ** 2)
    k2 = k.q6 * v * (k.q7 * v + k.q8) / (
        (k.q9 * v + k.q10) ** 2 + (wn - k.c2_cm_inv) ** 2)
    background = (k.j1 * carrier_Hz ** 3 + k.j2 * carrier_Hz ** 2
                  + k.j3 * carrier_Hz + k.j4)
    return max(k1 + k2 + background, 0.0)


def path_gain(link: LinkConfig, env: Environment) -> float:
    """Deterministic amplitude gain: spreading loss times exp(-kappa d / 2)."""
    kappa = absorption_coefficient(link.carrier_Hz, env)
    gt = 10.0 ** (link.tx_gain_dBi / 10.0)
    gr = 10.0 ** (link.rx_gain_dBi / 10.0)
    spread = SPEED_OF_LIGHT * math.sqrt(gt * gr) / (
        4.0 * math.pi * link.carrier_Hz * link.distance_m)
    return spread * math.exp(-0.5 * kappa * link.distance_m)


def pointing_fading_params(link: LinkConfig, env: Environment
                           ) -> PointingFadingParams:
    """Derive the composite-gain parameters from link geometry and attach
    the deterministic path gain."""
    zeta = math.sqrt(math.pi) * link.aperture_radius_m / (
        math.sqrt(2.0) * link.beam_footprint_m)
    erf_z = special.erf(zeta)
    s_frac = erf_z ** 2
    phi = (link.beam_footprint_m ** 2 * math.sqrt(math.pi) * erf_z
           * math.exp(zeta ** 2)
           / (8.0 * zeta * link.jitter_sigma_m ** 2))
    return PointingFadingParams(zeta=zeta, S=s_frac, phi=phi,
                                alpha=link.alpha, mu=link.mu,
                                hf_hat=link.hf_hat,
                                h_l=path_gain(link, env))


def pf_density(x, params: PointingFadingParams):
    """Density of the composite amplitude:

    f(x) = phi mu^{phi/alpha} x^{phi-1} / ((S h)^phi Gamma(mu))
           * Gamma((alpha mu - phi)/alpha, mu x^alpha / (S h)^alpha)

    with h = hf_hat.  Defined for x > 0.
    """
    a, mu, phi = params.alpha, params.mu, params.phi
    sh = params.scale
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    if np.any(x <= 0):
        raise ValueError("pf_density is defined for x > 0")
    xi = phi * mu ** (phi / a) / (sh ** phi * special.gamma(mu))
    arg = mu * (x / sh) ** a
    g = upper_incomplete_gamma((a * mu - phi) / a, arg)
    # the recurrence can leave |eps|-scale negatives deep in the tail
    out = np.maximum(xi * x ** (phi - 1.0) * g, 0.0)
    return float(out[0]) if scalar else out


def pf_cdf(y, params: PointingFadingParams):
    """Closed-form distribution function of the composite amplitude,

    F(y) = [ B^{phi/alpha} y^phi Gamma(mu - phi/alpha, B y^alpha)
             + gamma_lower(mu, B y^alpha) ] / Gamma(mu),
    B = mu / (S h)^alpha.

    Companion to pf_density, used where an explicit CDF is cheaper than
    integrating the density.
    """
    a, mu, phi = params.alpha, params.mu, params.phi
    sh = params.scale
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y).astype(float)
    out = np.zeros_like(y)
    pos = y > 0
    if np.any(pos):
        b = mu / sh ** a
        u = b * y[pos] ** a
        term1 = b ** (phi / a) * y[pos] ** phi * upper_incomplete_gamma(
            mu - phi / a, u)
        term2 = special.gammainc(mu, u) * special.gamma(mu)
        out[pos] = np.clip((term1 + term2) / special.gamma(mu), 0.0, 1.0)
    return float(out[0]) if scalar else out


def sample_channel_gain(params: PointingFadingParams,
                        stream: np.random.Generator, size=None):
    """Draw composite amplitudes by construction.

    The misalignment factor is S U^{1/phi} with U uniform on (0,1); the
    fading envelope is hf_hat (G/mu)^{1/alpha} with G gamma-distributed
    with shape mu and unit scale.  The product follows the pf_density law.
    """
    u = stream.random(size)
    g = stream.gamma(shape=params.mu, scale=1.0, size=size)
    return (params.S * u ** (1.0 / params.phi)
            * params.hf_hat * (g / params.mu) ** (1.0 / params.alpha))
