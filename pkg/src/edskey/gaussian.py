"""Closed forms for the Rayleigh-fading Gaussian excited source.

Rates and exponents are in nats; SNRs are linear; energies are normalized by
the noise power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InfeasibleError
from .core import _e0_tilde_table
from .numerics import LN2, golden_max

LAMBDA_MIN = 1e-6
N_MAX = 10**7


@dataclass(frozen=True)
class GaussianSystem:
    """Two-way sounding of a reciprocal Rayleigh channel.

    ``sigma2`` is Alice's noise power; the excitation power is
    ``P = gamma_a * sigma2`` and Bob's noise power follows from ``gamma_b``.
    """

    gamma_a: float
    gamma_b: float
    sigma2: float = 1.0

    def __post_init__(self):
        if self.gamma_a < 0 or self.gamma_b < 0:
            raise DomainError("SNRs must be nonnegative")
        if not self.sigma2 > 0:
            raise DomainError("noise power must be positive")

    @classmethod
    def symmetric(cls, gamma, sigma2=1.0):
        return cls(gamma, gamma, sigma2)

    @property
    def symmetric_snr(self) -> bool:
        return self.gamma_a == self.gamma_b

    @property
    def power(self) -> float:
        return self.gamma_a * self.sigma2


@dataclass(frozen=True)
class EquivalentChannel:
    """``X_b = beta * X_a + Z`` with ``Z`` independent of ``X_a``."""

    beta: float
    noise_power: float
    signal_power: float  # E|X_a|^2
    gamma_eq: float


@dataclass(frozen=True)
class OnOffSignal:
    duty: float
    on_snr: float

    @classmethod
    def for_budget(cls, gamma, duty):
        if not 0 < duty <= 1:
            raise DomainError("duty cycle must lie in (0, 1]")
        return cls(duty, gamma / duty)

    @property
    def average_snr(self) -> float:
        return self.duty * self.on_snr


def _eq_snr(g):
    return g * g / (1.0 + 2.0 * g)


def gamma_eq(sys: GaussianSystem | float) -> float:
    """Equivalent SNR; a bare number is taken as the symmetric SNR."""
    if not isinstance(sys, GaussianSystem):
        if sys < 0:
            raise DomainError("SNR must be nonnegative")
        return _eq_snr(float(sys))
    ga, gb = sys.gamma_a, sys.gamma_b
    if ga == 0 or gb == 0:
        return 0.0
    # (1/ga + 1/gb + 1/(ga gb))^{-1}
    return ga * gb / (ga + gb + 1.0)


def i_k(sys: GaussianSystem | float) -> float:
    """Key rate of a constant excitation, ``log(1 + gamma_eq)`` nats."""
    return math.log1p(gamma_eq(sys))


def _i_k_prime(g):
    geq = _eq_snr(g)
    return 2.0 * g * (1.0 + g) / (1.0 + 2.0 * g) ** 2 / (1.0 + geq)


def equivalent_channel(sys: GaussianSystem) -> EquivalentChannel:
    p = sys.power
    sa2 = sys.sigma2
    if p == 0:
        sb2 = sa2 if sys.gamma_b == 0 else 0.0
    else:
        sb2 = p / sys.gamma_b if sys.gamma_b > 0 else math.inf
    beta = p / (p + sa2)
    signal = p + sa2
    noise = (p + sb2) - p * p / (p + sa2)
    geq = beta * beta * signal / noise if noise > 0 else math.inf
    if math.isnan(geq):
        geq = 0.0
    return EquivalentChannel(beta, noise, signal, geq)


@lru_cache(maxsize=None)
def gamma_c() -> float:
    """Threshold SNR: tangent point from the origin of ``I_K(gamma)``."""
    g = lambda x: i_k(x) - x * _i_k_prime(x)
    return brentq(g, 0.5, 10.0, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)


def capacity(gamma: float):
    """Key capacity ``max_lambda lambda I_K(gamma/lambda)`` and its duty cycle.

    Returns
    -------
    (c_k, lambda_c) : tuple of float
    """
    if gamma < 0:
        raise DomainError("SNR must be nonnegative")
    gc = gamma_c()
    if gamma >= gc:
        return i_k(gamma), 1.0
    lam = gamma / gc
    return lam * i_k(gc), lam


def min_energy_per_key_bit() -> float:
    """``(E_b / sigma^2)_min = gamma_c log 2 / I_K(gamma_c)``."""
    gc = gamma_c()
    return gc * LN2 / i_k(gc)


def energy_per_key_bit(gamma: float, onoff: bool = True) -> float:
    """``gamma log 2 / rate`` with rate ``C_K`` (on-off) or ``I_K`` (constant)."""
    rate = capacity(gamma)[0] if onoff else i_k(gamma)
    return gamma * LN2 / rate if rate > 0 else math.inf


def i_c(gamma: float) -> float:
    """Rate below which the reliability exponent is linear (rho* = 1)."""
    return math.log((1.0 + gamma_eq(gamma)) / 2.0)


def reliability_region(r_sk: float, gamma: float) -> int:
    if r_sk < 0 or gamma < 0:
        raise DomainError("rate and SNR must be nonnegative")
    ik = i_k(gamma)
    if r_sk >= ik:
        return 1
    if r_sk >= i_c(gamma):
        return 2
    return 3


def reliability_exponent(r_sk: float, gamma: float) -> float:
    """Constant-excitation reliability exponent at key rate ``r_sk`` (nats)."""
    region = reliability_region(r_sk, gamma)
    if region == 1:
        return 0.0
    slack = i_k(gamma) - r_sk
    if region == 3 and gamma_eq(gamma) >= 1.0:
        return slack + 1.0 - 2.0 * LN2
    rho = math.expm1(slack)
    return rho * (slack + 1.0) - (1.0 + rho) * slack


def optimal_rho(r_sk: float, gamma: float) -> float:
    """Optimizing rho: ``exp(I_K - r_sk) - 1`` clipped to ``[0, 1]``."""
    return min(max(math.expm1(i_k(gamma) - r_sk), 0.0), 1.0)


def _reliability_exponent_array(r, g):
    r = np.asarray(r, dtype=float)
    g = np.asarray(g, dtype=float)
    geq = g * g / (1.0 + 2.0 * g)
    ik = np.log1p(geq)
    slack = ik - r
    rho = np.expm1(slack)
    mid = rho * (slack + 1.0) - (1.0 + rho) * slack
    low = slack + 1.0 - 2.0 * LN2
    region3 = (r < np.log((1.0 + geq) / 2.0)) & (geq >= 1.0)
    out = np.where(region3, low, mid)
    return np.where(r >= ik, 0.0, out)


def onoff_search(exponent, scalar_exponent, r_sk, gamma, points=200):
    """Maximize ``lambda * exponent(r_sk/lambda, gamma/lambda)`` over the duty cycle.

    A log-spaced grid on ``[LAMBDA_MIN, 1]`` (``exponent`` must accept
    arrays) seeds a golden-section refinement in log-lambda around the best
    cell; ``lambda = 1`` is compared explicitly. Returns
    ``(value, lambda_e)`` with ``lambda_e = 1`` when nothing is positive.
    """
    lams = np.exp(np.linspace(math.log(LAMBDA_MIN), 0.0, points))
    lams[-1] = 1.0
    vals = lams * exponent(r_sk / lams, gamma / lams)
    i = int(np.argmax(vals))
    best_val, best_lam = float(vals[i]), float(lams[i])
    one = scalar_exponent(r_sk, gamma)
    if best_val <= one:
        return one, 1.0

    def f(u):
        lam = math.exp(u)
        return lam * scalar_exponent(r_sk / lam, gamma / lam)

    lo, hi = math.log(lams[max(i - 1, 0)]), math.log(lams[min(i + 1, points - 1)])
    u, val = golden_max(f, lo, min(hi, 0.0), tol=1e-10)
    if val > best_val:
        best_val, best_lam = val, min(math.exp(u), 1.0)
    return best_val, best_lam


def onoff_reliability_exponent(r_sk: float, gamma: float):
    """On-off reliability exponent and its optimizing duty cycle ``lambda_e``."""
    if r_sk < 0 or gamma < 0:
        raise DomainError("rate and SNR must be nonnegative")
    return onoff_search(_reliability_exponent_array, reliability_exponent, r_sk, gamma)


def block_length(b_key: float, epsilon: float, gamma: float, use_onoff: bool = False,
                 n_max: int = N_MAX):
    """Smallest ``n`` with ``n E_R(b_key log2 / n, gamma) >= log(1/epsilon)``.

    Returns None when no ``n <= n_max`` qualifies. ``n E_R(c/n)`` is
    nondecreasing in ``n`` (E_R is convex and nonincreasing in rate), which
    makes doubling plus bisection valid.
    """
    if b_key < 1:
        raise DomainError("key length must be at least one bit")
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    target = -math.log(epsilon)
    bits = b_key * LN2
    if use_onoff:
        er = lambda r: onoff_reliability_exponent(r, gamma)[0]
    else:
        er = lambda r: reliability_exponent(r, gamma)

    def ok(n):
        return n * er(bits / n) >= target

    # positive exponent at vanishing rate is necessary
    if (onoff_reliability_exponent(0.0, gamma)[0] if use_onoff else reliability_exponent(0.0, gamma)) <= 0:
        return None
    cap = capacity(gamma)[0] if use_onoff else i_k(gamma)
    lo = max(1, math.floor(bits / cap))
    if ok(lo):
        return lo
    hi = lo
    while not ok(hi):
        if hi >= n_max:
            return None
        lo, hi = hi, min(2 * hi, n_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def energy_grid(points=400, lo=1e-3, hi=10.0):
    return np.geomspace(lo, hi, points)


def finite_block_energy(b_key: float, epsilon: float, use_onoff: bool = False, gammas=None):
    """Minimum ``gamma * n`` over an SNR grid subject to the reliability target.

    Returns
    -------
    (energy, n, gamma) : tuple
        Energy normalized by the noise power.
    """
    gammas = energy_grid() if gammas is None else np.asarray(gammas, dtype=float)
    best = None
    for g in gammas:
        n = block_length(b_key, epsilon, float(g), use_onoff)
        if n is None:
            continue
        e = float(g) * n
        if best is None or e < best[0]:
            best = (e, n, float(g))
    if best is None:
        raise InfeasibleError(
            f"no SNR in [{gammas.min():.3g}, {gammas.max():.3g}] reaches error {epsilon} "
            f"for a {b_key}-bit key with n <= {N_MAX}"
        )
    return best


def gaussian_e0(rho: float, gamma: float, sigma2: float = 1.0) -> float:
    """Continuous Gallager function ``rho log(pi s2) + (1+rho) log(1+rho)``,
    ``s2 = (1+gamma) sigma2 / (1+gamma_eq)`` the conditional variance of X_a given X_b."""
    if not 0 <= rho <= 1:
        raise DomainError("rho must lie in [0, 1]")
    if gamma < 0:
        raise DomainError("SNR must be nonnegative")
    s2 = (1.0 + gamma) * sigma2 / (1.0 + gamma_eq(gamma))
    return rho * math.log(math.pi * s2) + (1.0 + rho) * math.log1p(rho)


def quantized_e0(rho: float, gamma: float, delta: float, span: float = 9.0) -> float:
    """Discretized Gallager function plus ``rho log(cell area)``.

    The real and imaginary parts of ``(X_a, X_b)`` are i.i.d. bivariate
    normal pairs, so each is quantized on a uniform grid of step ``delta``
    (cell masses from the density at cell midpoints, renormalized) and the
    complex value is twice the real one. Tends to :func:`gaussian_e0` as
    ``delta -> 0`` with ``sigma2 = 1``.
    """
    var = (1.0 + gamma) / 2.0
    eta = gamma / (1.0 + gamma)
    half = span * math.sqrt(var)
    k = int(math.ceil(half / delta))
    x = (np.arange(-k, k) + 0.5) * delta
    xa, xb = np.meshgrid(x, x, indexing="ij")
    quad = (xa**2 - 2 * eta * xa * xb + xb**2) / (var * (1 - eta**2))
    p = np.exp(-0.5 * quad)
    p /= p.sum()
    return 2.0 * (_e0_tilde_table(p, rho) + rho * math.log(delta))
