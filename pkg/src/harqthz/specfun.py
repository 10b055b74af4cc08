"""Special-function kernels: incomplete gamma for general real order,
Fox H and Meijer G via numerical Mellin-Barnes integration, and Bromwich
(inverse Laplace) line quadrature.

All contour work is done in log-gamma arithmetic so that large fading /
misalignment parameters do not overflow intermediate gamma products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special


class SpecfunError(Exception):
    """Base class for special-function evaluation failures."""


class ContourSeparationError(SpecfunError):
    """The pole families cannot be separated by a vertical contour."""


class ConvergenceError(SpecfunError):
    """A contour/residue evaluation did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class ContourConfig:
    """Knobs for Mellin-Barnes and Bromwich quadrature.

    abscissa    real part of the integration line (Bromwich: must be < 0)
    truncation  maximum |imaginary part| the line is extended to
    nodes       initial node count per half line (adaptively doubled)
    tolerance   target relative error
    """

    abscissa: float = -0.5
    truncation: float = 4096.0
    nodes: int = 2560
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")
        if self.nodes < 64:
            raise ValueError("nodes must be at least 64")
        if not (0.0 < self.tolerance <= 1e-2):
            raise ValueError("tolerance must lie in (0, 1e-2]")


DEFAULT_CONTOUR = ContourConfig()


# ---------------------------------------------------------------------------
# incomplete gamma with general real first argument
# ---------------------------------------------------------------------------

def upper_incomplete_gamma(a: float, x):
    """Upper incomplete gamma Gamma(a, x) for real a (possibly <= 0), x >= 0.

    For a > 0 this wraps the regularized scipy routine.  For a <= 0 the
    value is obtained by downward application of the recurrence
    Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a from a positive anchor,
    which keeps it verifiable against the direct tail integral.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")

    if a > 0:
        out = special.gammaincc(a, x) * special.gamma(a)
    else:
        if np.any(x == 0.0):
            raise ValueError(
                "Gamma(a, 0) diverges for a <= 0 (pole of the incomplete gamma)")
        n = int(math.floor(-a)) + 1          # smallest n with a + n > 0
        a_top = a + n
        if a_top == 0.0:                     # a is a nonpositive integer
            out = special.exp1(x)
            a_cur = 0.0
        else:
            out = special.gammaincc(a_top, x) * special.gamma(a_top)
            a_cur = a_top
        while a_cur > a + 1e-12:
            a_cur -= 1.0
            if abs(a_cur) < 1e-300:
                out = special.exp1(x)
                continue
            out = (out - x ** a_cur * np.exp(-x)) / a_cur
    return float(out[0]) if scalar else out


def log_upper_incomplete_gamma(a: float, x):
    """log Gamma(a, x) for real a and x > 0, stable far into the tail where
    the value itself underflows.  Large x uses the divergent asymptotic
    series Gamma(a,x) ~ x^{a-1} e^{-x} sum_k (a-1)...(a-k) / x^k truncated
    at its smallest term."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    cut = 60.0 + 2.0 * abs(a)
    out = np.empty_like(x)
    small = x < cut
    if np.any(small):
        out[small] = np.log(np.maximum(
            upper_incomplete_gamma(a, x[small]), 1e-300))
    if np.any(~small):
        xl = x[~small]
        series = np.ones_like(xl)
        term = np.ones_like(xl)
        for k in range(1, 30):
            new = term * (a - k) / xl
            if np.all(np.abs(new) >= np.abs(term)):
                break
            term = new
            series += term
            if np.all(np.abs(term) < 1e-17 * np.abs(series)):
                break
        out[~small] = (a - 1.0) * np.log(xl) - xl + np.log(series)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Fox H
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoxHSpec:
    """Parameter block of H^{m,n}_{p,q}[z | (a_j,A_j) ; (b_j,B_j)].

    The Mellin-Barnes kernel used here is

        Theta(s) = prod_{j<=m} Gamma(b_j + B_j s) * prod_{j<=n} Gamma(1 - a_j - A_j s)
                   / ( prod_{j>n} Gamma(a_j + A_j s) * prod_{j>m} Gamma(1 - b_j - B_j s) )

    and H = (1/2 pi i) int Theta(s) z^{-s} ds.  Upper parameters a_j may be
    complex (needed when the H function sits inside a Laplace inversion).
    """

    upper_params: tuple  # ((a_j, A_j), ...)
    lower_params: tuple  # ((b_j, B_j), ...)
    m: int
    n: int

    def __post_init__(self):
        p, q = len(self.upper_params), len(self.lower_params)
        if not (0 <= self.n <= p and 0 <= self.m <= q):
            raise ValueError("require 0 <= n <= p and 0 <= m <= q")
        if any(A <= 0 for _, A in self.upper_params) or any(
                B <= 0 for _, B in self.lower_params):
            raise ValueError("all A_j, B_j must be positive")

    def log_theta(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for j, (b, B) in enumerate(self.lower_params):
            if j < self.m:
                out = out + special.loggamma(b + B * s)
            else:
                out = out - special.loggamma(1.0 - b - B * s)
        for j, (a, A) in enumerate(self.upper_params):
            if j < self.n:
                out = out + special.loggamma(1.0 - a - A * s)
            else:
                out = out - special.loggamma(a + A * s)
        return out

    def left_poles(self, max_re_drop: float):
        """Poles of the j<=m gammas: s = -(b_j + k)/B_j, descending real part."""
        poles = []
        for j in range(self.m):
            b, B = self.lower_params[j]
            k = 0
            while True:
                s0 = -(b + k) / B
                if s0.real if isinstance(s0, complex) else s0 < -max_re_drop:
                    break
                poles.append(complex(s0))
                k += 1
        return poles

    def right_poles_first(self):
        """Smallest real part among poles of the j<=n gammas."""
        vals = []
        for j in range(self.n):
            a, A = self.upper_params[j]
            vals.append(((1.0 - complex(a)) / A).real)
        return min(vals) if vals else math.inf

    def left_poles_max(self):
        vals = []
        for j in range(self.m):
            b, B = self.lower_params[j]
            vals.append((-complex(b) / B).real)
        return max(vals) if vals else -math.inf


def _trapezoid_line(log_f, abscissa, tolerance, truncation, nodes):
    """Adaptive trapezoid of exp(log_f(s)) on the vertical line Re s = abscissa.

    Returns (integral value of (1/2 pi i) int f ds, error estimate).
    log_f must accept a complex ndarray.
    """
    T = max(16.0, truncation / 64.0)
    h = T / max(nodes // 16, 64)
    h = min(h, 0.1)

    def line_sum(h_, T_):
        y = np.arange(-T_, T_ + 0.5 * h_, h_)
        s = abscissa + 1j * y
        lf = log_f(s)
        m0 = np.max(lf.real)
        if not np.isfinite(m0):
            return 0.0 + 0.0j
        return np.exp(m0) * np.sum(np.exp(lf - m0)) * h_ / (2.0 * np.pi)

    val = line_sum(h, T)
    # grow truncation until the value stabilizes
    for _ in range(8):
        if T >= truncation:
            break
        T2 = min(2.0 * T, truncation)
        val2 = line_sum(h, T2)
        drift = abs(val2 - val)
        val, T = val2, T2
        if drift <= 0.25 * tolerance * max(abs(val), 1e-300):
            break
    # node-doubling error estimate
    val_fine = line_sum(h / 2.0, T)
    err = abs(val_fine - val)
    val = val_fine
    if err > 10.0 * tolerance * max(abs(val), 1e-300):
        raise ConvergenceError(
            f"Mellin-Barnes contour did not converge (achieved {err:.3e} "
            f"relative {err / max(abs(val), 1e-300):.3e})",
            achieved=err)
    return val, err


def _residue_sum_circles(log_f, poles, z_log_slope, tolerance, max_groups=2000,
                         n_circle=64):
    """Sum of residues of exp(log_f) over `poles` via small-circle quadrature.

    Poles are grouped by proximity so confluent (higher-order) poles are
    integrated together.  `z_log_slope` is d(log|term|)/d(Re s) used only to
    decide when the series has converged.
    """
    poles = sorted(poles, key=lambda s: -s.real)
    total = 0.0 + 0.0j
    small_streak = 0
    i = 0
    groups = 0
    while i < len(poles) and groups < max_groups:
        group = [poles[i]]
        j = i + 1
        while j < len(poles) and abs(poles[j] - group[-1]) < 0.05:
            group.append(poles[j])
            j += 1
        center = sum(group) / len(group)
        spread = max(abs(p - center) for p in group)
        # distance to nearest pole outside the group
        others = poles[:i] + poles[j:]
        d_out = min((abs(p - center) for p in others), default=1.0)
        radius = max(min(0.45 * d_out, 0.35), 2.0 * spread + 1e-3)
        ang = 2.0 * np.pi * (np.arange(n_circle) + 0.5) / n_circle
        circ = radius * np.exp(1j * ang)
        lf = log_f(center + circ)
        m0 = np.max(lf.real)
        if np.isfinite(m0):
            term = np.exp(m0) * np.mean(np.exp(lf - m0) * circ)
        else:
            term = 0.0 + 0.0j
        total += term
        if abs(term) < tolerance * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 3:
                return total
        else:
            small_streak = 0
        i = j
        groups += 1
    if groups >= max_groups:
        raise ConvergenceError("residue series did not converge")
    return total


def fox_h(spec: FoxHSpec, z: float, cfg: ContourConfig = DEFAULT_CONTOUR,
          method: str = "auto"):
    """Numerical Fox H function H^{m,n}_{p,q}[z | ...].

    method:
      "contour"      vertical Mellin-Barnes line (requires separated poles)
      "residue-left" sum of residues over the left pole family (closing the
                     contour to the left; converges for |z| < 1 regimes)
      "auto"         contour when a separating vertical line exists,
                     residue-left otherwise
    """
    if z <= 0:
        raise ValueError("z must be positive")
    lz = math.log(z)

    def log_term(s):
        return spec.log_theta(s) - np.asarray(s, dtype=complex) * lz

    left_max = spec.left_poles_max()
    right_min = spec.right_poles_first()
    separated = left_max < right_min - 1e-9

    if method == "auto":
        method = "contour" if separated else "residue-left"

    if method == "contour":
        if not separated:
            raise ContourSeparationError(
                f"left poles reach Re s = {left_max:.4g} while right poles "
                f"start at Re s = {right_min:.4g}; no vertical contour "
                "separates them")
        c = 0.5 * (left_max + right_min)
        if math.isinf(left_max):
            c = right_min - 0.5
        if math.isinf(right_min):
            c = left_max + 0.5
        val, _ = _trapezoid_line(log_term, c, cfg.tolerance, cfg.truncation,
                                 cfg.nodes)
        return val
    if method == "residue-left":
        if spec.m == 0:
            return 0.0 + 0.0j
        drop = 80.0 + 10.0 * abs(lz)
        poles = spec.left_poles(drop)
        return _residue_sum_circles(log_term, poles, lz, cfg.tolerance)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Meijer G^{0,M}_{M,M}( z | 1+theta/2, ..., 1+theta/2 ; 0, 1, ..., 1 )
# ---------------------------------------------------------------------------

def meijer_g_0M_MM(theta_half: float, M: int, z: float,
                   cfg: ContourConfig = DEFAULT_CONTOUR) -> float:
    """The specific Meijer G in the high-SNR CDF asymptote.

    Kernel:  Theta(s) = (1/s) * [Gamma(s - theta_half)/Gamma(s)]^M * z^s,
    value = sum of residues at s = theta_half - k (contour closed to the
    left, where z^s vanishes for z > 1).  Identically zero for z <= 1.
    Residues of arbitrary multiplicity are extracted by small-circle
    quadrature in log-gamma arithmetic.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if theta_half <= 0:
        raise ValueError("theta_half must be positive")
    if z <= 1.0:
        return 0.0
    lz = math.log(z)

    def log_term(s):
        s = np.asarray(s, dtype=complex)
        return (M * (special.loggamma(s - theta_half) - special.loggamma(s))
                - np.log(s) + s * lz)

    # pole candidates: numerator poles s = theta_half - k plus the s = 0
    # kernel pole (it is usually cancelled, but grouping handles either way)
    # z^{-k} decay sets the pole horizon for large lz; for z barely above 1
    # the (k!)^{-M} factor takes over, so a fixed cap suffices (the residue
    # summer early-stops long before the cap anyway)
    kmax = int(min(80.0 / lz, 400.0) + 3 * theta_half + 60)
    poles = [complex(theta_half - k) for k in range(kmax)]
    if all(abs(p) > 1e-9 for p in poles):
        poles.append(0.0 + 0.0j)
    val = _residue_sum_circles(log_term, poles, lz, cfg.tolerance)
    if abs(val.imag) > max(1e-6 * abs(val.real), 1e-12):
        raise ConvergenceError(
            f"Meijer G residue sum left imaginary part {val.imag:.3e}")
    return float(val.real)


# ---------------------------------------------------------------------------
# Bromwich inversion
# ---------------------------------------------------------------------------

def bromwich_inverse(transform, x: float, cfg: ContourConfig = DEFAULT_CONTOUR,
                     return_error: bool = False):
    """(1/2 pi i) int_{c-i inf}^{c+i inf} transform(t) 2^{-x t} dt, c < 0.

    `transform` must accept a complex ndarray of Laplace points and is
    expected to satisfy transform(conj t) = conj transform(t), which lets
    the quadrature run on the upper half line only.  Error is estimated by
    truncation growth plus node doubling; a ConvergenceError carrying the
    achieved error is raised when the target tolerance is missed badly.
    """
    c = cfg.abscissa
    if c >= 0:
        raise ValueError("Bromwich abscissa must be negative for this inversion")
    ln2 = math.log(2.0)

    def half_line(h, T):
        # trapezoid on y = 0, h, 2h, ... so that halving h reuses every
        # previously visited ordinate (the transform may cache per-point)
        y = np.arange(0.0, T, h)
        t = c + 1j * y
        f = transform(t) * np.exp(-x * t * ln2)
        vals = f.real.copy()
        vals[0] *= 0.5
        return np.nansum(vals) * h / np.pi

    h = 0.1
    T = max(64.0, min(256.0, cfg.truncation))
    val = half_line(h, T)
    trunc_err = math.inf
    for _ in range(10):
        if T >= cfg.truncation:
            break
        T2 = min(2.0 * T, cfg.truncation)
        val2 = half_line(h, T2)
        trunc_err = abs(val2 - val)
        val, T = val2, T2
        if trunc_err <= 0.25 * cfg.tolerance * max(abs(val), 1e-300):
            break
    val_fine = half_line(0.5 * h, T)
    node_err = abs(val_fine - val)
    err = node_err + (0.0 if not math.isfinite(trunc_err) else trunc_err)
    if err > 100.0 * cfg.tolerance * max(abs(val_fine), 1e-300) and err > 1e-13:
        raise ConvergenceError(
            f"Bromwich inversion did not converge (achieved absolute error "
            f"estimate {err:.3e} at truncation {T:g})", achieved=err)
    if return_error:
        return val_fine, err
    return val_fine
