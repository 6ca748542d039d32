"""icsel: budget-aware annotation selection for in-context learning.

Selects which unlabeled examples to annotate by combining model-uncertainty
feedback with maximum-coverage sampling over a semantic similarity graph, then
evaluates the annotated pool through a k-NN retrieval ICL loop with
calibration metrics.
"""

from icsel._accel import BACKEND
from icsel.core import (
    AnnotatedEntry,
    AnnotatedSet,
    Budget,
    Example,
    Pool,
    init_pool_kmeans,
    load_pool,
    prepare_candidate_pool,
    save_pool,
)
from icsel.coverage import (
    CoverInstance,
    WeightTiers,
    brute_force_maxcover,
    greedy_maxcover,
    greedy_weighted_maxcover,
)
from icsel.graph import (
    CoverSet,
    SemanticGraph,
    build_cover_sets,
    build_delta_graph,
    build_mnn_graph,
    cosine_similarity,
    heuristic_m_range,
)
from icsel.feedback import (
    HardSet,
    KernelOracleSource,
    UncertaintyRecord,
    kernel_oracle_predict,
    score_classification,
    score_generation,
    select_hard_set,
)
from icsel.inference import (
    DEFAULT_TEMPLATE,
    EvalReport,
    PromptTemplate,
    assemble_prompt,
    evaluate,
    retrieve_topk,
)
from icsel.calibration import ece, simplex_membership

__version__ = "0.1.0"
__all__ = [
    "BACKEND",
    "AnnotatedEntry",
    "AnnotatedSet",
    "Budget",
    "Example",
    "Pool",
    "init_pool_kmeans",
    "load_pool",
    "prepare_candidate_pool",
    "save_pool",
    "CoverInstance",
    "WeightTiers",
    "brute_force_maxcover",
    "greedy_maxcover",
    "greedy_weighted_maxcover",
    "CoverSet",
    "SemanticGraph",
    "build_cover_sets",
    "build_delta_graph",
    "build_mnn_graph",
    "cosine_similarity",
    "heuristic_m_range",
    "HardSet",
    "KernelOracleSource",
    "UncertaintyRecord",
    "kernel_oracle_predict",
    "score_classification",
    "score_generation",
    "select_hard_set",
    "DEFAULT_TEMPLATE",
    "EvalReport",
    "PromptTemplate",
    "assemble_prompt",
    "evaluate",
    "retrieve_topk",
    "ece",
    "simplex_membership",
    "__version__",
]
