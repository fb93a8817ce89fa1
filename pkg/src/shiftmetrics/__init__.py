"""Projective, vague and d-bar distances between measures on A^N, with
certified enclosures, g-measure tools and uniqueness certificates."""

__version__ = "0.1.0"

from .enclosure import Enclosure
from .errors import (
    CapacityError,
    ConvergenceError,
    DomainError,
    EnvelopeError,
    NotPrimitiveError,
    ShiftMetricsError,
)
from .symbolic import Alphabet, CylinderIndex, Word, capacity, decode_word, encode_word, enumerate_words
from .measures import (
    BINARY,
    SEPARATION_ALPHA,
    InducedMeasure,
    MarkovMeasure,
    SeparabilityMeasure,
    SequenceRule,
    flip_sequence,
    lift_order,
    tau_coupling_disagreement,
    tau_p,
    tau_permutation,
)
from .spectral import SpectralResult, birkhoff_tau, dp_distance, perturbation_bound, pf_stationary, primitivity_index
from .gfun import (
    SPIN,
    HulseG,
    LocallyConstantG,
    LongRangeIsingG,
    canonical_approximation,
    g_eval_interval,
    g_to_markov,
    hulse_g,
    log_ratio_norm,
    long_range_g,
    markov_to_g,
    svar,
    transfer_matrix,
    variation,
)
from .distances import (
    MeanCycleCertificate,
    dbar_lower_blocks,
    dbar_upper_markov,
    projective_markov,
    projective_truncated,
    projective_upper_technical,
    vague_distance,
)
from .entropy import (
    EntropyReport,
    entropy_report,
    integral_log_g,
    markov_entropy,
    relative_entropy_rate,
    relative_entropy_truncated,
    variational_defect,
)
from .certify import (
    CONVERGES,
    INCONCLUSIVE,
    ApproximationScheme,
    UniquenessCertificate,
    certify_scheme,
    hulse_distance_probe,
    long_range_scheme,
    table_scheme,
)
