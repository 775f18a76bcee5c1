"""Discrete memoryless index channels.

Indexes are the natural binary encodings of 0 .. 2^R - 1, so the Hamming
distance between two indexes is the popcount of their XOR.  Binary symmetric
channels factor over bit positions; the structured path below applies that
factorization instead of materializing the 2^R x 2^R matrix, which is what
makes rates up to R = 15 per codebook tractable.
"""

from dataclasses import dataclass, field

import numpy as np

# Largest alphabet for which an explicit transition matrix may be built.
DENSE_ALPHABET_MAX = 4096


def _popcount(a):
    a = np.array(a, dtype=np.int64, copy=True)
    count = np.zeros_like(a)
    while a.any():
        count += a & 1
        a >>= 1
    return count


def _bsc_matrix(rate_bits, epsilon):
    idx = np.arange(1 << rate_bits)
    ham = _popcount(idx[:, None] ^ idx[None, :])
    # 0**0 == 1 covers the epsilon = 0 diagonal
    return epsilon ** ham * (1.0 - epsilon) ** (rate_bits - ham)


def _bsc_apply(values, rate_bits, epsilon):
    """Multiply by the BSC transition matrix through its per-bit factors."""
    values = np.asarray(values, dtype=np.float64)
    out = values.reshape(values.shape[0], -1).copy()
    if epsilon > 0.0:
        width = out.shape[1]
        for b in range(rate_bits):
            v = out.reshape(-1, 2, (1 << b) * width)
            keep = v[:, 0].copy()
            flip = v[:, 1].copy()
            v[:, 0] = (1.0 - epsilon) * keep + epsilon * flip
            v[:, 1] = epsilon * keep + (1.0 - epsilon) * flip
    return out.reshape(values.shape)


@dataclass
class Dmc:
    """Transition law P(received j | sent i) over a 2^rate_bits alphabet.

    Exactly one backing representation is active: a dense row-stochastic
    matrix, or a BSC crossover probability.  ``bsc`` instances only build the
    dense matrix on demand (and refuse to beyond DENSE_ALPHABET_MAX).
    """

    rate_bits: int
    bsc_epsilon: float | None = None
    _matrix: np.ndarray | None = field(default=None, repr=False)
    _cdf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.rate_bits < 0:
            raise ValueError("rate_bits must be >= 0")
        if self.bsc_epsilon is None and self._matrix is None:
            raise ValueError("need a transition matrix or a BSC epsilon")

    @property
    def size(self):
        return 1 << self.rate_bits

    @property
    def is_noiseless(self):
        if self.bsc_epsilon is not None:
            return self.bsc_epsilon == 0.0
        return bool(np.array_equal(self._matrix, np.eye(self.size)))

    @property
    def matrix(self):
        """Dense transition matrix (built lazily for BSC instances)."""
        if self._matrix is None:
            if self.size > DENSE_ALPHABET_MAX:
                raise ValueError(
                    f"alphabet {self.size} too large for a dense matrix; "
                    "use the structured operations"
                )
            self._matrix = _bsc_matrix(self.rate_bits, self.bsc_epsilon)
        return self._matrix

    def apply(self, values):
        """P @ values: expectation over the received index given the sent one.

        ``values`` has shape (2^R,) or (2^R, d).
        """
        values = np.asarray(values, dtype=np.float64)
        if values.shape[0] != self.size:
            raise ValueError("first axis must match the channel alphabet")
        if self.is_noiseless:
            return values.copy()
        if self.bsc_epsilon is not None:
            return _bsc_apply(values, self.rate_bits, self.bsc_epsilon)
        return self.matrix @ values

    def apply_t(self, values):
        """P.T @ values: pushes per-sent-index masses onto received indexes."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape[0] != self.size:
            raise ValueError("first axis must match the channel alphabet")
        if self.is_noiseless:
            return values.copy()
        if self.bsc_epsilon is not None:
            # BSC matrices are symmetric
            return _bsc_apply(values, self.rate_bits, self.bsc_epsilon)
        return self.matrix.T @ values


def dmc_from_matrix(matrix):
    """Wrap an explicit transition matrix after validating it."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("transition matrix must be square")
    size = matrix.shape[0]
    rate_bits = int(size - 1).bit_length()
    if size != (1 << rate_bits):
        raise ValueError(f"alphabet size {size} is not a power of two")
    if np.any(matrix < 0.0):
        raise ValueError("transition probabilities must be >= 0")
    if np.any(np.abs(matrix.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("rows must sum to 1 within 1e-12")
    return Dmc(rate_bits=rate_bits, _matrix=matrix)


def bsc(rate_bits, epsilon):
    """Memoryless binary symmetric channel over R-bit indexes.

    P(j | i) = eps^H(i,j) (1-eps)^(R-H(i,j)) with H the Hamming distance of
    the natural binary encodings.
    """
    if rate_bits < 0:
        raise ValueError("rate_bits must be >= 0")
    epsilon = float(epsilon)
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError("crossover probability must lie in [0, 0.5]")
    return Dmc(rate_bits=rate_bits, bsc_epsilon=epsilon)


def bsc_capacity(epsilon):
    """1 - h2(eps), in bits per channel use."""
    epsilon = float(epsilon)
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError("crossover probability must lie in [0, 0.5]")
    if epsilon == 0.0:
        return 1.0
    return float(1.0 + epsilon * np.log2(epsilon)
                 + (1.0 - epsilon) * np.log2(1.0 - epsilon))


def transmit(index, dmc, rng):
    """Send one index through the channel, returning the received index."""
    return int(transmit_batch(np.asarray([index]), dmc, rng)[0])


def transmit_batch(indices, dmc, rng):
    """Send an int array of indices through the channel.

    BSC instances draw iid bit flips (XOR masks); dense channels sample by
    inverse CDF on precomputed row CDFs.  Both are exact samplers of P(j|i).
    """
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= dmc.size):
        raise ValueError("index out of range for channel alphabet")
    if dmc.is_noiseless:
        return indices.astype(np.int64, copy=True)
    if dmc.bsc_epsilon is not None:
        flips = rng.random((indices.shape[0], dmc.rate_bits)) < dmc.bsc_epsilon
        masks = flips @ (1 << np.arange(dmc.rate_bits, dtype=np.int64))
        return indices.astype(np.int64) ^ masks
    if dmc._cdf is None:
        dmc._cdf = np.cumsum(dmc.matrix, axis=1)
    rows = dmc._cdf[indices]
    u = rng.random(indices.shape[0])
    received = (rows <= u[:, None]).sum(axis=1)
    return np.minimum(received, dmc.size - 1).astype(np.int64)
