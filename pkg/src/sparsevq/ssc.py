"""Split coding of sparse vectors: a support index plus scalar-quantized
coefficients.

The support gets ceil(log2 binom(n, k)) bits through its lexicographic rank
(combinatorial number system); the remaining bits split as evenly as
possible over the k coefficients with the excess going to the lower
positions.  Coefficient quantizers are Lloyd-trained on standard Gaussian
samples once per rate and cached, since the sparse source's nonzeros are
standard Gaussian no matter the support.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import ScalarCodebook, lloyd_scalar_gaussian

logger = logging.getLogger(__name__)

_GAUSSIAN_CODEBOOKS = {}
_GAUSSIAN_SEED = 0x5ca1a12


def gaussian_codebook(rate_bits):
    """Deterministic Lloyd-trained standard Gaussian quantizer, cached."""
    if rate_bits not in _GAUSSIAN_CODEBOOKS:
        rng = np.random.default_rng(np.random.SeedSequence([_GAUSSIAN_SEED,
                                                            rate_bits]))
        n_samples = max(200_000, 2000 * (1 << rate_bits))
        samples = rng.standard_normal(n_samples)
        _GAUSSIAN_CODEBOOKS[rate_bits] = lloyd_scalar_gaussian(rate_bits, samples)
    return _GAUSSIAN_CODEBOOKS[rate_bits]


def support_bits(n, k):
    """Bits needed to index every size-k support: ceil(log2 binom(n, k))."""
    return max(1, math.ceil(math.log2(math.comb(n, k)))) if k > 0 else 0


def support_rank(support, n):
    """Lexicographic rank of a sorted support among all k-subsets of n."""
    support = list(support)
    k = len(support)
    rank = 0
    prev = -1
    for t, v in enumerate(support):
        if v <= prev or v >= n:
            raise ValueError("support must be sorted, unique and inside [0, n)")
        for j in range(prev + 1, v):
            rank += math.comb(n - 1 - j, k - 1 - t)
        prev = v
    return rank


def support_unrank(rank, n, k):
    """Inverse of support_rank; returns the sorted support as a list."""
    if not 0 <= rank < math.comb(n, k):
        raise ValueError("rank out of range")
    support = []
    start = 0
    for t in range(k):
        for v in range(start, n):
            block = math.comb(n - 1 - v, k - 1 - t)
            if rank < block:
                support.append(v)
                start = v + 1
                break
            rank -= block
    return support


@dataclass
class SscCodec:
    """Bit allocation and scalar codebooks for one (n, k, rate) operating point."""

    n: int
    k: int
    rate_bits: int
    support_bits: int = field(init=False)
    coeff_bits: list = field(init=False)
    codebooks: list = field(init=False)

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= k <= n")
        self.support_bits = support_bits(self.n, self.k)
        remaining = self.rate_bits - self.support_bits
        if remaining < self.k:
            raise ValueError(
                f"rate {self.rate_bits} leaves {remaining} coefficient bits "
                f"for k={self.k}; at least one bit per coefficient required"
            )
        base, extra = divmod(remaining, self.k)
        self.coeff_bits = [base + (1 if t < extra else 0) for t in range(self.k)]
        self.codebooks = [gaussian_codebook(r) for r in self.coeff_bits]

    @property
    def used_bits(self):
        return self.support_bits + sum(self.coeff_bits)


def ssc_encode(x, codec):
    """Encode one vector or a batch.

    Returns ``(ranks, level_indices)``: the support rank(s) and the per-
    position quantizer outputs, coefficients ordered by ascending support
    index.  The support is the k entries of largest magnitude; magnitude
    ties and zero padding both resolve to the lowest indexes.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    if xb.shape[1] != codec.n:
        raise ValueError("vector dimension mismatch")
    order = np.argsort(-np.abs(xb), axis=1, kind="stable")[:, : codec.k]
    supports = np.sort(order, axis=1)
    ranks = _rank_batch(supports, codec.n)
    coeffs = np.take_along_axis(xb, supports, axis=1)
    levels = np.empty_like(supports)
    for t in range(codec.k):
        levels[:, t] = codec.codebooks[t].encode(coeffs[:, t])
    if single:
        return int(ranks[0]), levels[0]
    return ranks, levels


def ssc_decode(ranks, level_indices, codec):
    """Decode support ranks and level indices back to sparse vectors.

    Channel-corrupted ranks past the last valid support are clamped to it;
    the clamp count is logged.
    """
    single = np.asarray(ranks).ndim == 0
    ranks = np.atleast_1d(np.asarray(ranks, dtype=np.int64))
    levels = np.atleast_2d(np.asarray(level_indices, dtype=np.int64))
    total = math.comb(codec.n, codec.k)
    over = ranks >= total
    if over.any():
        logger.warning("clamped %d out-of-range support ranks", int(over.sum()))
        ranks = np.minimum(ranks, total - 1)
    supports = _unrank_batch(ranks, codec.n, codec.k)
    x = np.zeros((ranks.shape[0], codec.n))
    for t in range(codec.k):
        np.put_along_axis(x, supports[:, t: t + 1],
                          codec.codebooks[t].decode(levels[:, t])[:, None], axis=1)
    return x[0] if single else x


def _position_cumsums(n, k, t):
    """csum[j] = number of k-subsets whose position-t element is below j."""
    cvals = np.array([math.comb(n - 1 - j, k - 1 - t) for j in range(n)],
                     dtype=np.int64)
    return np.concatenate([np.zeros(1, dtype=np.int64), np.cumsum(cvals)])


def _rank_batch(supports, n):
    k = supports.shape[1]
    ranks = np.zeros(supports.shape[0], dtype=np.int64)
    prev = np.full(supports.shape[0], -1, dtype=np.int64)
    for t in range(k):
        csum = _position_cumsums(n, k, t)
        v = supports[:, t]
        ranks += csum[v] - csum[prev + 1]
        prev = v
    return ranks


def _unrank_batch(ranks, n, k):
    remaining = ranks.astype(np.int64).copy()
    supports = np.zeros((ranks.shape[0], k), dtype=np.int64)
    start = np.zeros(ranks.shape[0], dtype=np.int64)
    for t in range(k):
        csum = _position_cumsums(n, k, t)
        target = csum[start] + remaining
        v = np.searchsorted(csum, target, side="right") - 1
        supports[:, t] = v
        remaining = target - csum[v]
        start = v + 1
    return supports
