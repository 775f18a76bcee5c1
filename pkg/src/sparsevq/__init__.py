"""Joint source-channel vector quantization for compressed sensing.

The package trains channel-matched vector quantizers that operate on noisy
linear measurements of sparse vectors and reconstruct in the sparse domain,
plus the classical baselines (channel-unaware quantizers and separate
support/coefficient coding) and the matching analytical distortion bounds.
"""

from .bounds import BoundInputs, bound, bound_nmse_db, bound_noiseless, bound_noisy
from .channel import Dmc, bsc, bsc_capacity, dmc_from_matrix, transmit, transmit_batch
from .covq import (Codebook, FitResult, NumericalFailure, TrainConfig,
                   TrainTrace, covq_encode, covq_decoder_update, fit_covq,
                   nnc_encode, nnc_decoder_update, split_empty_cells,
                   train_covq, train_nnc)
from .estimators import (MmseConfig, ScalarCodebook, lloyd_scalar_gaussian,
                         mmse_exact, omp, omp_batch, support_posteriors)
from .harness import (ConfigError, EvalStats, ExperimentConfig, SweepRecord,
                      TrainedPoint, derive_rng, eval_point, evaluate_nmse,
                      pick_estimator, reconstruct_batch, run_point, run_sweep,
                      train_point)
from .msvq import (StagePlan, encoder_flops, fit_msvq, msvq_decoder_update_stage,
                   msvq_encode_stage, msvq_reconstruct, train_msnnc, train_msvq)
from .sensing import (SensingModel, SourceSpec, generate_sensing_matrix,
                      generate_source, generate_sources, measure,
                      mutual_coherence)
from .ssc import SscCodec, ssc_decode, ssc_encode, support_bits, support_rank, support_unrank

__all__ = [
    "BoundInputs", "bound", "bound_nmse_db", "bound_noiseless", "bound_noisy",
    "Dmc", "bsc", "bsc_capacity", "dmc_from_matrix", "transmit", "transmit_batch",
    "Codebook", "FitResult", "NumericalFailure", "TrainConfig", "TrainTrace",
    "covq_encode", "covq_decoder_update", "fit_covq", "nnc_encode",
    "nnc_decoder_update", "split_empty_cells", "train_covq", "train_nnc",
    "MmseConfig", "ScalarCodebook", "lloyd_scalar_gaussian", "mmse_exact",
    "omp", "omp_batch", "support_posteriors",
    "ConfigError", "EvalStats", "ExperimentConfig", "SweepRecord",
    "TrainedPoint", "derive_rng", "eval_point", "evaluate_nmse",
    "pick_estimator", "reconstruct_batch", "run_point", "run_sweep",
    "train_point",
    "StagePlan", "encoder_flops", "fit_msvq", "msvq_decoder_update_stage",
    "msvq_encode_stage", "msvq_reconstruct", "train_msnnc", "train_msvq",
    "SensingModel", "SourceSpec", "generate_sensing_matrix", "generate_source",
    "generate_sources", "measure", "mutual_coherence",
    "SscCodec", "ssc_decode", "ssc_encode", "support_bits", "support_rank",
    "support_unrank",
]

__version__ = "0.1.0"
