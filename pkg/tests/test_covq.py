"""Channel-optimized VQ: encoder scores, decoder updates, Lloyd training.

Expected values come from hand-worked two-vector examples and from
brute-force oracles that evaluate the channel-expected distortion with the
dense transition matrix.
"""

import numpy as np
import pytest

from sparsevq.channel import bsc, dmc_from_matrix
from sparsevq.covq import (
    Codebook,
    NumericalFailure,
    TrainConfig,
    covq_decoder_update,
    covq_encode,
    fit_covq,
    nnc_decoder_update,
    nnc_encode,
    split_empty_cells,
)


def expected_distortion(x, codebook, dmc):
    """Brute-force E_J ||x - c_J||^2 per (sample, sent index) via the dense
    transition matrix.  Shape (n_samples, size)."""
    xb = np.atleast_2d(np.asarray(x, dtype=np.float64))
    c = codebook.vectors
    d2 = ((xb[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
    if dmc is None:
        return d2
    return d2 @ dmc.matrix.T


# ---------------------------------------------------------------------------
# encoder


def test_encode_scores_hand_example():
    # R=1, c0=(1,0), c1=(-1,0), eps=0.1, x=(0.3,0):
    #   E[||c||^2 | i] = 1 for both i
    #   E[c | 0] = 0.9*(1,0) + 0.1*(-1,0) = (0.8, 0);  E[c | 1] = (-0.8, 0)
    #   score(x,0) = 1 - 2*0.3*0.8 = 0.52;  score(x,1) = 1 + 0.48 = 1.48
    cb = Codebook([[1.0, 0.0], [-1.0, 0.0]])
    dmc = bsc(1, 0.1)
    scores = covq_encode(np.array([0.3, 0.0]), cb, dmc, return_scores=True)
    assert np.allclose(scores, [0.52, 1.48], atol=1e-12)
    assert covq_encode(np.array([0.3, 0.0]), cb, dmc) == 0


def test_encode_matches_expected_distortion_oracle():
    # The encoder's argmin must agree with brute-force minimization of
    # E||x - c_J||^2, and its scores must differ from that expectation by
    # exactly ||x||^2 (a per-sample constant).
    rng = np.random.default_rng(7)
    cb = Codebook(rng.standard_normal((8, 3)))
    dmc = bsc(3, 0.12)
    x = rng.standard_normal((200, 3))
    oracle = expected_distortion(x, cb, dmc)
    idx = covq_encode(x, cb, dmc)
    assert np.array_equal(idx, np.argmin(oracle, axis=1))
    scores = covq_encode(x, cb, dmc, return_scores=True)
    energy = (x ** 2).sum(axis=1, keepdims=True)
    assert np.allclose(scores + energy, oracle, atol=1e-10)


def test_encode_noiseless_is_nearest_neighbor():
    rng = np.random.default_rng(8)
    cb = Codebook(rng.standard_normal((4, 2)))
    x = rng.standard_normal((100, 2))
    nn = np.argmin(((x[:, None, :] - cb.vectors[None]) ** 2).sum(axis=2), axis=1)
    assert np.array_equal(covq_encode(x, cb, None), nn)
    assert np.array_equal(covq_encode(x, cb, bsc(2, 0.0)), nn)


def test_encode_tie_breaks_to_lowest_index():
    cb = Codebook([[1.0], [1.0], [-1.0], [-1.0]])
    assert covq_encode(np.array([2.0]), cb, None) == 0
    assert covq_encode(np.array([-2.0]), cb, None) == 2


def test_encode_single_vs_batch_and_validation():
    rng = np.random.default_rng(9)
    cb = Codebook(rng.standard_normal((4, 2)))
    x = rng.standard_normal(2)
    single = covq_encode(x, cb, None)
    assert isinstance(single, int)
    batch = covq_encode(x[None, :], cb, None)
    assert batch.shape == (1,) and batch[0] == single
    with pytest.raises(ValueError):
        covq_encode(rng.standard_normal(3), cb, None)  # dim mismatch
    with pytest.raises(ValueError):
        covq_encode(x, cb, bsc(3, 0.1))  # alphabet size mismatch


# ---------------------------------------------------------------------------
# decoder update


def test_decoder_update_noiseless_is_cell_centroid():
    rng = np.random.default_rng(10)
    vectors = rng.standard_normal((50, 2))
    idx = rng.integers(0, 3, size=50)  # cell 3 stays empty
    old = Codebook(rng.standard_normal((4, 2)))
    new = covq_decoder_update(vectors, idx, None, old)
    for j in range(3):
        assert np.allclose(new.vectors[j], vectors[idx == j].mean(axis=0),
                           atol=1e-12)
    assert np.array_equal(new.vectors[3], old.vectors[3])  # no mass: keep


def test_decoder_update_two_sample_hand_oracle():
    # One vector per cell, R=1, eps=0.2:
    #   c_0 = 0.8*v0 + 0.2*v1 = (1.4, 0.8)
    #   c_1 = 0.2*v0 + 0.8*v1 = (2.6, -2.8)
    vectors = np.array([[1.0, 2.0], [3.0, -4.0]])
    old = Codebook(np.zeros((2, 2)))
    new = covq_decoder_update(vectors, np.array([0, 1]), bsc(1, 0.2), old)
    assert np.allclose(new.vectors, [[1.4, 0.8], [2.6, -2.8]], atol=1e-12)


def test_decoder_update_uniform_channel_gives_global_mean():
    # When every row of the transition matrix is uniform the received index
    # carries no information, so every codevector becomes the global mean.
    rng = np.random.default_rng(11)
    vectors = rng.standard_normal((64, 3))
    idx = rng.integers(0, 4, size=64)
    dmc = dmc_from_matrix(np.full((4, 4), 0.25))
    new = covq_decoder_update(vectors, idx, dmc, Codebook(np.zeros((4, 3))))
    assert np.allclose(new.vectors, np.tile(vectors.mean(axis=0), (4, 1)),
                       atol=1e-12)


def test_decoder_update_minimizes_expected_distortion():
    # The channel-weighted centroid must beat random perturbations of itself
    # under the sampled objective sum_s E_J ||v_s - c_J||^2.
    rng = np.random.default_rng(12)
    vectors = rng.standard_normal((80, 2))
    idx = rng.integers(0, 4, size=80)
    dmc = bsc(2, 0.15)
    cb = covq_decoder_update(vectors, idx, dmc,
                             Codebook(rng.standard_normal((4, 2))))
    base = expected_distortion(vectors, cb, dmc)[np.arange(80), idx].sum()
    for _ in range(20):
        other = Codebook(cb.vectors + 0.1 * rng.standard_normal((4, 2)))
        perturbed = expected_distortion(vectors, other, dmc)[
            np.arange(80), idx].sum()
        assert perturbed >= base - 1e-9


# ---------------------------------------------------------------------------
# empty-cell reseeding


def test_split_empty_cells_values_and_noop():
    cb = Codebook([[2.0, 0.0], [0.0, 1.0]])
    out = split_empty_cells(cb, usage=[5, 0], delta=1e-3)
    assert np.allclose(out.vectors[1], [2.002, 0.0], atol=1e-15)
    assert np.array_equal(out.vectors[0], cb.vectors[0])
    same = split_empty_cells(cb, usage=[5, 3])
    assert same is cb
    with pytest.raises(ValueError):
        split_empty_cells(cb, usage=[1, 2, 3])


def test_split_empty_cells_distinct_reseeds():
    cb = Codebook(np.array([[4.0], [0.0], [0.0], [0.0]]))
    out = split_empty_cells(cb, usage=[9, 0, 0, 0], delta=1e-3)
    reseeded = out.vectors[1:].ravel()
    assert np.allclose(reseeded, [4.004, 4.008, 4.012], atol=1e-12)
    assert len(np.unique(out.vectors, axis=0)) == 4


def test_split_empty_cells_spreads_over_busy_cells():
    cb = Codebook(np.array([[4.0], [-2.0]] + [[0.0]] * 6))
    out = split_empty_cells(cb, usage=[3, 5, 0, 0, 0, 0, 0, 0], delta=1e-3)
    # donors in decreasing-usage order: cell 1 (-2.0), then cell 0 (4.0),
    # wrapping into later rounds with growing offsets
    assert np.allclose(out.vectors[2:].ravel(),
                       [-2.002, 4.004, -2.004, 4.008, -2.006, 4.012],
                       atol=1e-12)
    assert np.array_equal(out.vectors[:2], cb.vectors[:2])


# ---------------------------------------------------------------------------
# training


def test_fit_noiseless_monotone_and_reaches_size():
    rng = np.random.default_rng(13)
    vectors = rng.standard_normal((4000, 2))
    result = fit_covq(vectors, 3, None, TrainConfig(n_train=4000))
    assert result.codebook.size == 8
    diffs = np.diff(result.trace.distortion)
    assert np.all(diffs <= 1e-12)
    assert result.assignments.shape == (4000,)
    # growth ladder from 1 to 8 vectors records at least three growth events
    assert len(result.trace.events) >= 3
    assert all(0 <= e < len(result.trace.distortion)
               for e in result.trace.events)


def test_fit_noisy_monotone_and_trace_matches_oracle():
    rng = np.random.default_rng(14)
    vectors = rng.standard_normal((2000, 2))
    dmc = bsc(2, 0.1)
    result = fit_covq(vectors, 2, dmc, TrainConfig(n_train=2000))
    diffs = np.diff(result.trace.distortion)
    assert np.all(diffs <= 1e-12)
    # the last trace entry is the sampled channel-expected distortion of the
    # returned codebook under the returned assignments
    oracle = expected_distortion(vectors, result.codebook, dmc)
    sampled = oracle[np.arange(len(vectors)), result.assignments].mean()
    assert np.isclose(result.trace.distortion[-1], sampled, atol=1e-10)
    # and the assignments are the encoder's argmin for that codebook
    assert np.array_equal(result.assignments,
                          covq_encode(vectors, result.codebook, dmc))


def test_fit_rate_zero_gives_global_mean():
    rng = np.random.default_rng(15)
    vectors = rng.standard_normal((500, 3)) + 2.0
    result = fit_covq(vectors, 0, None, TrainConfig(n_train=500))
    assert result.codebook.size == 1
    assert np.allclose(result.codebook.vectors[0], vectors.mean(axis=0),
                       atol=1e-12)
    centered = vectors - vectors.mean(axis=0)
    variance = float((centered ** 2).sum(axis=1).mean())
    assert np.isclose(result.trace.distortion[-1], variance, atol=1e-10)


def test_fit_noisy_starts_from_noiseless_codebook():
    # With the channel nearly noiseless the refined codebook stays close to
    # the noiseless one, and passing that codebook as init reproduces the
    # same fit as the automatic warm start.
    rng = np.random.default_rng(16)
    vectors = rng.standard_normal((1500, 2))
    cfg = TrainConfig(n_train=1500)
    base = fit_covq(vectors, 2, None, cfg)
    auto = fit_covq(vectors, 2, bsc(2, 0.05), cfg)
    manual = fit_covq(vectors, 2, bsc(2, 0.05), cfg, init=base.codebook)
    assert np.allclose(auto.codebook.vectors, manual.codebook.vectors,
                       atol=1e-12)
    assert np.allclose(auto.trace.distortion, manual.trace.distortion,
                       atol=1e-12)


def test_fit_init_shape_validation():
    rng = np.random.default_rng(17)
    vectors = rng.standard_normal((100, 2))
    bad = Codebook(rng.standard_normal((2, 2)))  # size 2, need 4
    with pytest.raises(ValueError):
        fit_covq(vectors, 2, bsc(2, 0.1), TrainConfig(n_train=100), init=bad)
    with pytest.raises(ValueError):
        fit_covq(vectors, 2, bsc(3, 0.1), TrainConfig(n_train=100))
    with pytest.raises(ValueError):
        fit_covq(vectors[0], 1, None)  # not 2-d


def test_fit_raises_numerical_failure_on_overflow():
    vectors = np.full((16, 2), 1e200)
    with np.errstate(invalid="ignore"), pytest.raises(NumericalFailure):
        fit_covq(vectors, 1, None, TrainConfig(n_train=16))


def test_fit_two_cluster_data_recovers_centers():
    rng = np.random.default_rng(18)
    centers = np.array([[-3.0, 0.0], [3.0, 0.0]])
    vectors = np.concatenate([
        centers[0] + 0.05 * rng.standard_normal((1000, 2)),
        centers[1] + 0.05 * rng.standard_normal((1000, 2)),
    ])
    result = fit_covq(vectors, 1, None, TrainConfig(n_train=2000))
    got = result.codebook.vectors[np.argsort(result.codebook.vectors[:, 0])]
    assert np.allclose(got, centers, atol=0.02)


# ---------------------------------------------------------------------------
# misc


def test_codebook_validation_and_rate_bits():
    with pytest.raises(ValueError):
        Codebook(np.zeros((3, 2)))  # not a power of two
    with pytest.raises(ValueError):
        Codebook(np.zeros(4))  # not 2-d
    with pytest.raises(ValueError):
        Codebook(np.array([[np.inf, 0.0]]))
    with pytest.raises(ValueError):
        Codebook(np.zeros((2, 2)), domain="other")
    assert Codebook(np.zeros((8, 2))).rate_bits == 3
    assert Codebook(np.zeros((1, 2))).rate_bits == 0


def test_train_config_validation():
    for kwargs in ({"max_iters": 0}, {"rel_tol": -1e-9}, {"n_train": 0},
                   {"delta_split": 0.0}):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


def test_measurement_domain_aliases():
    assert nnc_encode is covq_encode
    assert nnc_decoder_update is covq_decoder_update
