"""Robust max-min fair transceiver design for K-pair MIMO interference channels.

Library layout:

* :mod:`icmaxmin.numerics` - dense Hermitian eigen primitives
* :mod:`icmaxmin.model` - dimensions, channels, CSI error model, transceivers
* :mod:`icmaxmin.sinr` - actual / worst-case SINR and rate functionals
* :mod:`icmaxmin.decorrelator` - closed-form receive-filter step
* :mod:`icmaxmin.sdp` - dense block-PSD interior-point core
* :mod:`icmaxmin.precoder` - power-minimization step with rank-1 certificates
* :mod:`icmaxmin.ao` - alternating max-min driver
* :mod:`icmaxmin.baselines` - alignment and iterative comparison schemes
* :mod:`icmaxmin.harness` - Monte-Carlo experiments, CSV/JSONL outputs
"""

from .ao import AoConfig, AoTrace, initialize, inverse_map_check, solve_max_min
from .decorrelator import EfPair, build_ef, optimize_all_decorrelators, optimize_decorrelator
from .model import (
    ChannelSet,
    CsiView,
    SystemDims,
    TransceiverSet,
    derive_csi,
    generate_channels,
    sample_delta,
    transmit_power,
)
from .numerics import HermEig, hermitian_eig, inv_sqrt_pd, min_eigenvalue
from .precoder import (
    QvInstance,
    RankCertificate,
    build_qv,
    certify,
    extract_rank1,
    solve_qv,
)
from .sdp import (
    SdpBlock,
    SdpConstraint,
    SdpOptions,
    SdpProblem,
    SdpSolution,
    SdpStatus,
    embed_complex,
    solve_sdp,
)
from .sinr import (
    StreamId,
    actual_sinr,
    min_worst_case_sinr,
    mutual_info,
    worst_case_sinr,
    worst_case_sinr_gram,
)
from .harness import (
    ExperimentConfig,
    aggregate,
    config_from_file,
    records_to_csv,
    run_drop,
    run_experiment,
)
from .baselines import ia3_closed_form, max_sinr_baseline, min_leakage_baseline

__version__ = "0.1.0"
