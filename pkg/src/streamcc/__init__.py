"""Single-pass streaming correlation clustering with distance predictions."""
from .exceptions import (
    ConfigError,
    ContractError,
    EdgeListParseError,
    ParameterError,
    SizeLimitError,
    StreamIntegrityError,
    UnsupportedModeError,
)
from .graph import (
    EdgeUpdate,
    RandomPermutation,
    SignedGraph,
    brute_force_opt,
    canonical_labels,
    cost,
    generate_sbm,
    load_edge_list,
    replay_stream,
    to_stream,
)
from .predictor import (
    ConstantOracle,
    EmbeddingOracle,
    NoisyOracle,
    RoundingParams,
    TableOracle,
    embedding_oracle,
    noisy_oracle,
    quality_L,
    round_probability,
)
from .sketch import L0Sampler, SpaceMeter, SparsifierGraph, build_sparsifier, estimated_cost
from .pivot import (
    TruncationThresholds,
    cklpu_pivot,
    cluster_from_queues,
    cm_pivot,
    pairwise_diss,
    pairwise_diss2,
    pairwise_diss2_preround,
    truncated_pivot,
    truncated_pivot_pred,
)
from .streaming import dynamic_cc, insertion_cc
from .ballgrow import general_cc, grow_ball
from .estimators import DynamicStreamCC, GeneralStreamCC, InsertionStreamCC, PivotCC, TruncatedPivotCC
from .harness import ExperimentConfig, ReportRow, replay_oracle, run_experiment, summarize
from .validation import check_labels, check_oracle, check_signed_graph, check_stream

__version__ = "0.1.0"
