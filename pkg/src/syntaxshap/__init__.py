"""Syntax-constrained Shapley attributions for next-token predictions."""

from .attribution import (
    METHOD_EXACT_SHAPLEY,
    METHOD_RANDOM,
    METHOD_SYNTAXSHAP,
    METHOD_SYNTAXSHAP_W,
    METHODS,
    AttributionResult,
    CallCounts,
    aggregate_to_words,
    exact_shapley,
    fetch_top_prediction,
    random_attribution,
    ranks,
    syntaxshap,
    syntaxshap_weighted,
)
from .coalition import (
    Coalition,
    CoalitionFamily,
    EvaluationBudget,
    UpdateCount,
    coalitions_at_level,
    coalitions_for_feature,
    count_updates,
    is_allowed_coalition,
    predicted_evaluations,
)
from .deptree import (
    DependencyTree,
    SentenceRecord,
    TokenizedTree,
    TokenNode,
    WordNode,
    avg_dependency_distance,
    expand_subtokens,
    filter_dataset,
    identity_spans,
    parse_conllu,
    split_conllu_blocks,
    to_conllu,
)
from .errors import (
    AlignmentError,
    ConlluParseError,
    OracleError,
    ProtocolError,
    SizeLimitError,
    SyntaxShapError,
    TransportError,
    TreeStructureError,
)
from .metrics import (
    AlignmentReport,
    CoherencyReport,
    MaskedSentence,
    MetricConfig,
    MetricReport,
    SentencePair,
    accuracy_at_k,
    coherency,
    cosine_similarity,
    fidelity,
    metric_report,
    prob_divergence_at_k,
    semantic_alignment,
    top_tokens,
)
from .oracle import (
    MaskStrategy,
    MemoizedOracle,
    OracleMeta,
    RemoteOracle,
    TokenRef,
    ValueOracle,
    ValueRequest,
    ValueResponse,
    ignore_token_lm,
    memoized,
    remote_oracle,
    sum_oracle,
    toy_hash_lm,
    validate_response,
)

__version__ = "0.1.0"
