"""Binary phase quantization of the Gaussian source.

Sign-quantizing both users' observations gives a doubly symmetric binary
source DSBS(theta). Rates and exponents in this module are in **bits**; use
:func:`edskey.numerics.bits_to_nats` at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import gaussian
from .errors import DomainError
from .numerics import (
    binary_entropy_bits,
    bisect_decreasing,
    inverse_binary_entropy_bits,
    inverse_binary_entropy_bits_array,
)

NOISELESS = math.inf


@dataclass(frozen=True)
class DsbsModel:
    """Crossover ``theta`` between Alice and Bob, ``w`` between Alice and Eve."""

    theta: float
    w: float = 0.5

    def __post_init__(self):
        if not 0 <= self.theta <= 0.5:
            raise DomainError("theta must lie in [0, 1/2]")
        if not 0 <= self.w <= 0.5:
            raise DomainError("w must lie in [0, 1/2]")

    @classmethod
    def from_snr(cls, gamma, w=0.5):
        return cls(theta_from_snr(gamma), w)


def theta_from_snr(gamma: float) -> float:
    """Crossover of sign-quantized observations at symmetric SNR ``gamma``."""
    if gamma < 0:
        raise DomainError("SNR must be nonnegative")
    return 0.5 - math.atan(math.sqrt(gaussian.gamma_eq(gamma))) / math.pi


def _theta_prime(gamma):
    geq = gaussian.gamma_eq(gamma)
    dgeq = 2.0 * gamma * (1.0 + gamma) / (1.0 + 2.0 * gamma) ** 2
    return -dgeq / (2.0 * math.sqrt(geq) * (1.0 + geq) * math.pi)


def binary_key_rate(theta: float) -> float:
    """``1 - H_B(theta)`` bits."""
    if not 0 <= theta <= 0.5:
        raise DomainError("theta must lie in [0, 1/2]")
    return 1.0 - binary_entropy_bits(theta)


def key_rate_from_snr(gamma: float) -> float:
    return binary_key_rate(theta_from_snr(gamma))


@lru_cache(maxsize=None)
def binary_gamma_c() -> float:
    """Tangent point from the origin of ``gamma -> 1 - H_B(theta(gamma))``."""

    def g(x):
        th = theta_from_snr(x)
        slope = -math.log2((1.0 - th) / th) * _theta_prime(x)
        return binary_key_rate(th) - x * slope

    return brentq(g, 0.5, 10.0, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)


def capacity(gamma: float):
    """On-off key capacity (bits) and duty cycle, same construction as the Gaussian case."""
    if gamma < 0:
        raise DomainError("SNR must be nonnegative")
    gc = binary_gamma_c()
    if gamma >= gc:
        return key_rate_from_snr(gamma), 1.0
    lam = gamma / gc
    return lam * key_rate_from_snr(gc), lam


def tilted_crossover(theta: float, rho: float) -> float:
    """``theta^{1/(1+rho)} / (theta^{1/(1+rho)} + (1-theta)^{1/(1+rho)})``."""
    a = theta ** (1.0 / (1.0 + rho))
    b = (1.0 - theta) ** (1.0 / (1.0 + rho))
    return a / (a + b)


def t_theta(theta: float, tau: float) -> float:
    """``-tau log2(theta) - (1-tau) log2(1-theta)``; 0*log(0) taken as 0."""
    out = 0.0
    if tau > 0:
        out -= tau * math.log2(theta) if theta > 0 else -math.inf
    if tau < 1:
        out -= (1.0 - tau) * math.log2(1.0 - theta)
    return out


def critical_rate(theta: float) -> float:
    """``H_B(sqrt(theta)/(sqrt(theta)+sqrt(1-theta)))``: message rate where rho* hits 1."""
    return binary_entropy_bits(tilted_crossover(theta, 1.0))


def reliability_exponent_rm(r_m: float, theta: float) -> float:
    """Reliability exponent (bits) as a function of the message rate ``r_m`` (bits).

    ``theta = 0`` with ``r_m < 1`` yields :data:`NOISELESS` (``inf``).
    """
    if not 0 <= theta <= 0.5:
        raise DomainError("theta must lie in [0, 1/2]")
    if r_m < 0:
        raise DomainError("message rate must be nonnegative")
    if theta == 0.0:
        return NOISELESS if r_m > 0 else 0.0
    if r_m <= binary_entropy_bits(theta):
        return 0.0
    if r_m >= critical_rate(theta):
        return r_m - 2.0 * math.log2(math.sqrt(theta) + math.sqrt(1.0 - theta))
    tau = inverse_binary_entropy_bits(r_m)
    return max(t_theta(theta, tau) - binary_entropy_bits(tau), 0.0)


def key_rate_thresholds(theta: float):
    """``(I_K, I_c)`` in bits: region boundaries of the key-rate exponent."""
    return binary_key_rate(theta), 1.0 - critical_rate(theta)


def reliability_region(r_sk: float, theta: float) -> int:
    ik, ic = key_rate_thresholds(theta)
    if r_sk >= ik:
        return 1
    if r_sk >= ic:
        return 2
    return 3


def reliability_exponent(r_sk: float, gamma: float) -> float:
    """Reliability exponent (bits) at key rate ``r_sk`` (bits) for an independent
    eavesdropper, using ``R_M = 1 - R_SK``."""
    if not 0 <= r_sk <= 1:
        raise DomainError("key rate must lie in [0, 1] bits")
    return reliability_exponent_theta(r_sk, theta_from_snr(gamma))


def reliability_exponent_theta(r_sk: float, theta: float) -> float:
    if not 0 <= r_sk <= 1:
        raise DomainError("key rate must lie in [0, 1] bits")
    region = reliability_region(r_sk, theta)
    if region == 1:
        return 0.0
    if theta == 0.0:
        return NOISELESS
    if region == 3:
        return 1.0 - 2.0 * math.log2(math.sqrt(theta) + math.sqrt(1.0 - theta)) - r_sk
    tau = inverse_binary_entropy_bits(1.0 - r_sk)
    return max(t_theta(theta, tau) - binary_entropy_bits(tau), 0.0)


def secrecy_f0(alpha: float, w: float) -> float:
    """``-log2(w^{1+alpha} + (1-w)^{1+alpha})``."""
    return -math.log2(w ** (1.0 + alpha) + (1.0 - w) ** (1.0 + alpha))


def secrecy_slope(alpha: float, w: float) -> float:
    """Derivative of :func:`secrecy_f0` in alpha: ``T_w(delta)``."""
    a = w ** (1.0 + alpha)
    b = (1.0 - w) ** (1.0 + alpha)
    return t_theta(w, a / (a + b))


def secrecy_exponent(r_sum: float, w: float) -> float:
    """Secrecy exponent (bits) at sum rate ``r_sk + r_m`` (bits) for a BSC(w) eavesdropper."""
    if r_sum < 0:
        raise DomainError("sum rate must be nonnegative")
    if not 0 < w <= 0.5:
        raise DomainError("w must lie in (0, 1/2]; w = 0 leaves no secrecy")
    if r_sum > binary_entropy_bits(w):
        return 0.0
    r_c = secrecy_slope(1.0, w)
    if r_sum <= r_c:
        return secrecy_f0(1.0, w) - r_sum
    alpha = bisect_decreasing(lambda a: secrecy_slope(a, w) - r_sum, 0.0, 1.0, tol=1e-12)
    return max(secrecy_f0(alpha, w) - alpha * r_sum, 0.0)


def _reliability_exponent_array(r, g):
    r, g = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(g, dtype=float))
    geq = g * g / (1.0 + 2.0 * g)
    th = 0.5 - np.arctan(np.sqrt(geq)) / math.pi
    th = np.clip(th, 1e-300, 0.5)
    s = np.sqrt(th) + np.sqrt(1.0 - th)
    ik = 1.0 - binary_entropy_bits(th)
    ic = 1.0 - binary_entropy_bits(np.sqrt(th) / s)
    low = 1.0 - 2.0 * np.log2(s) - r
    tau = inverse_binary_entropy_bits_array(np.clip(1.0 - r, 0.0, 1.0))
    mid = -tau * np.log2(th) - (1.0 - tau) * np.log2(1.0 - th) - binary_entropy_bits(tau)
    out = np.where(r < ic, low, np.maximum(mid, 0.0))
    return np.where((r >= ik) | (r >= 1.0), 0.0, out)


def _scalar(r, g):
    return reliability_exponent(r, g) if r < 1.0 else 0.0


def onoff_reliability_exponent(r_sk: float, gamma: float):
    """On-off reliability exponent (bits) and its duty cycle ``lambda_e``.

    Duty cycles with ``r_sk/lambda >= 1`` bit contribute nothing.
    """
    if not 0 <= r_sk <= 1:
        raise DomainError("key rate must lie in [0, 1] bits")
    if gamma < 0:
        raise DomainError("SNR must be nonnegative")
    return gaussian.onoff_search(_reliability_exponent_array, _scalar, r_sk, gamma)


def sample_crossover(gamma: float, samples: int, seed: int = 0):
    """Monte-Carlo crossover of sign-quantized real parts.

    Draws the real part of ``X_a`` and of the independent residual ``Z`` of
    the equivalent channel ``X_b = beta X_a + Z`` and counts sign
    disagreements.

    Returns
    -------
    (theta_hat, std_error) : tuple of float
    """
    ch = gaussian.equivalent_channel(gaussian.GaussianSystem.symmetric(gamma))
    rng = np.random.default_rng(seed)
    xa = rng.normal(0.0, math.sqrt(ch.signal_power / 2.0), samples)
    z = rng.normal(0.0, math.sqrt(ch.noise_power / 2.0), samples)
    xb = ch.beta * xa + z
    theta_hat = float(np.mean((xa >= 0) != (xb >= 0)))
    return theta_hat, math.sqrt(max(theta_hat * (1 - theta_hat), 1e-300) / samples)
