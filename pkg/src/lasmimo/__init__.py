"""Likelihood ascent search detection for large spatial-multiplexing MIMO.

A numpy library plus CLI for simulating the greedy single-symbol descent
detector on square V-BLAST systems, comparing it against the exhaustive
minimum-distance oracle, and empirically probing the large-system claims:
strict cost descent, the noise-region characterization of the optimum,
concentration of the column cross-correlation statistic, and convergence
of the error rate toward the single-antenna AWGN reference.
"""

__version__ = "0.1.0"

from .asymptotics import (
    RegionReport,
    UpdateTuple,
    ZSample,
    check_Ln,
    check_region,
    delta_d,
    vw_statistics,
    z_pdf_experiment,
    z_statistic,
)
from .detect import (
    DetectionResult,
    GramMatrix,
    LasState,
    cost_delta,
    initial_filter,
    l_opt,
    las_detect,
    las_step,
    ml_bruteforce,
)
from .harness import (
    AgreementResult,
    BerPoint,
    ExperimentConfig,
    SnrTargetPoint,
    ber_sweep,
    las_vs_ml_agreement,
    run_trial,
    siso_awgn_ber,
    snr_for_target_ber,
)
from .model import (
    ComplexChannel,
    Constellation,
    NoiseVector,
    RealModel,
    SymbolVector,
    demodulate,
    modulate,
    realify,
    realify_vector,
    sample_channel,
    sample_noise,
    sigma2_for_snr_db,
    transmit,
    trial_stream,
)

__all__ = [
    "__version__",
    "ComplexChannel",
    "Constellation",
    "NoiseVector",
    "RealModel",
    "SymbolVector",
    "demodulate",
    "modulate",
    "realify",
    "realify_vector",
    "sample_channel",
    "sample_noise",
    "sigma2_for_snr_db",
    "transmit",
    "trial_stream",
    "DetectionResult",
    "GramMatrix",
    "LasState",
    "cost_delta",
    "initial_filter",
    "l_opt",
    "las_detect",
    "las_step",
    "ml_bruteforce",
    "RegionReport",
    "UpdateTuple",
    "ZSample",
    "check_Ln",
    "check_region",
    "delta_d",
    "vw_statistics",
    "z_pdf_experiment",
    "z_statistic",
    "AgreementResult",
    "BerPoint",
    "ExperimentConfig",
    "SnrTargetPoint",
    "ber_sweep",
    "las_vs_ml_agreement",
    "run_trial",
    "siso_awgn_ber",
    "snr_for_target_ber",
]
