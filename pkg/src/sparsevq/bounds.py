"""Analytical MSE lower bounds for quantized transmission of sparse sources.

Both bounds charge log2 binom(n, k) bits against the budget for locating
the support and spread the rest over the k active Gaussian coefficients,
scaled by the channel capacity.  The noisy-measurement bound adds an
estimation floor k*c1 driven by the measurement noise and the sensing
matrix coherence.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundInputs:
    n: int
    k: int
    rate_bits: float
    capacity: float = 1.0
    sigma_w2: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= k <= n")
        if not 0.0 <= self.capacity <= 1.0:
            raise ValueError("capacity must lie in [0, 1]")
        if self.sigma_w2 < 0.0 or not 0.0 <= self.mu <= 1.0:
            raise ValueError("invalid sigma_w2 or mu")


def c1(k, mu, sigma_w2):
    """Estimation-floor factor sigma_w2 / (1 + sigma_w2 + (k+1) mu)."""
    return sigma_w2 / (1.0 + sigma_w2 + (k + 1) * mu)


def c2(k):
    """Gaussian high-resolution constant 2((k/2)Gamma(k/2))^(2/k)((k+2)/k)^(k/2)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k <= 300:
        # direct form keeps small-k values exact (e.g. 4.0 at k=2)
        half = (k / 2.0) * math.gamma(k / 2.0)
        return 2.0 * half ** (2.0 / k) * ((k + 2.0) / k) ** (k / 2.0)
    log_half = math.log(k / 2.0) + math.lgamma(k / 2.0)
    return 2.0 * math.exp(2.0 / k * log_half + k / 2.0 * math.log((k + 2.0) / k))


def log2_binom(n, k):
    """log2 binom(n, k) through log-gamma, stable for large n."""
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) \
        / math.log(2.0)


def bound_noiseless(inputs):
    """Distortion floor c2(k) 2^(-2 C (R - log2 binom) / k), total MSE."""
    exponent = -2.0 * inputs.capacity \
        * (inputs.rate_bits - log2_binom(inputs.n, inputs.k)) / inputs.k
    return c2(inputs.k) * 2.0 ** exponent


def bound_noisy(inputs):
    """k c1 + c1 c2 2^(-2 C (R - log2 binom) / k); reduces to 0 at sigma_w2=0."""
    floor = c1(inputs.k, inputs.mu, inputs.sigma_w2)
    exponent = -2.0 * inputs.capacity \
        * (inputs.rate_bits - log2_binom(inputs.n, inputs.k)) / inputs.k
    return inputs.k * floor + floor * c2(inputs.k) * 2.0 ** exponent


def bound(inputs):
    """Noisy-measurement bound when sigma_w2 > 0, else the noiseless one."""
    return bound_noisy(inputs) if inputs.sigma_w2 > 0.0 else bound_noiseless(inputs)


def bound_nmse_db(inputs):
    """The applicable bound normalized by k, in dB."""
    return 10.0 * math.log10(bound(inputs) / inputs.k)
