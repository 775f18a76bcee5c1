"""Exactly-sparse Gaussian sources, sensing matrices and noisy measurements."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SourceSpec:
    """Source dimension and sparsity level.

    Vectors are exactly ``k``-sparse: the support is drawn uniformly over all
    size-``k`` subsets and the nonzero entries are iid standard Gaussian.
    ``k = 0`` is a degenerate all-zero source kept only for edge-case tests.
    """

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"source dimension must be positive, got n={self.n}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")


@dataclass
class SensingModel:
    """Sensing matrix with unit-norm columns plus measurement noise variance.

    Columns of ``phi`` are rescaled to unit l2 norm at construction; the
    rescaling is idempotent.  ``sigma_w2`` is the variance of the additive
    white Gaussian measurement noise (0 means noiseless measurements).
    """

    phi: np.ndarray
    sigma_w2: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        if phi.ndim != 2:
            raise ValueError("phi must be a 2-d array")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi contains non-finite entries")
        norms = np.linalg.norm(phi, axis=0)
        if np.any(norms == 0.0):
            raise ValueError("phi has a zero column")
        self.phi = phi / norms
        self.sigma_w2 = float(self.sigma_w2)
        if self.sigma_w2 < 0.0:
            raise ValueError("sigma_w2 must be >= 0")

    @property
    def m(self):
        return self.phi.shape[0]

    @property
    def n(self):
        return self.phi.shape[1]


def generate_source(spec, rng):
    """Draw one exactly k-sparse vector.

    Returns ``(x, support)`` where ``support`` is the sorted index array of
    the k active positions.  The support is a uniform k-subset (partial
    shuffle) and the active values are standard Gaussian.
    """
    support = np.sort(rng.permutation(spec.n)[: spec.k])
    x = np.zeros(spec.n)
    x[support] = rng.standard_normal(spec.k)
    return x, support


def generate_sources(spec, n_samples, rng):
    """Vectorized batch draw: returns ``(X, supports)`` with shapes
    ``(n_samples, n)`` and ``(n_samples, k)``.

    The k smallest of n iid uniforms form a uniform k-subset, which makes the
    batch path exchangeable with repeated single draws in distribution.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    x = np.zeros((n_samples, spec.n))
    if spec.k == 0:
        return x, np.zeros((n_samples, 0), dtype=np.int64)
    u = rng.random((n_samples, spec.n))
    picked = np.argpartition(u, spec.k - 1, axis=1)[:, : spec.k]
    supports = np.sort(picked, axis=1)
    values = rng.standard_normal((n_samples, spec.k))
    np.put_along_axis(x, supports, values, axis=1)
    return x, supports


def generate_sensing_matrix(n, m, rng):
    """iid N(0, 1/m) entries, then columns rescaled to unit norm."""
    if m < 1:
        raise ValueError("m must be positive")
    if m > n:
        raise ValueError(f"more measurements than dimensions (m={m} > n={n})")
    phi = rng.standard_normal((m, n)) / np.sqrt(m)
    return phi / np.linalg.norm(phi, axis=0)


def measure(x, model, rng=None):
    """y = phi x + w.  Accepts a single vector or a (batch, n) array.

    Noise is only sampled when ``sigma_w2 > 0`` so the noiseless branch
    consumes no randomness.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.n:
        raise ValueError(f"x has dimension {x.shape[-1]}, model expects {model.n}")
    y = x @ model.phi.T
    if model.sigma_w2 > 0.0:
        if rng is None:
            raise ValueError("rng required when sigma_w2 > 0")
        y = y + rng.normal(0.0, np.sqrt(model.sigma_w2), size=y.shape)
    return y


def mutual_coherence(phi):
    """Largest absolute normalized inner product between distinct columns."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2 or phi.shape[1] < 2:
        raise ValueError("need a matrix with at least two columns")
    norms = np.linalg.norm(phi, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("zero column has no direction")
    u = phi / norms
    gram = np.abs(u.T @ u)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())
