"""Trainable chunk alignment for interpretable sentence similarity.

The pipeline: chunk vectors (mean-pooled static vectors or boundary
concatenation of precomputed contextual vectors) are scored pairwise by
a gated pointer model; either a row softmax (one-directional) or a fixed
number of differentiable Sinkhorn sweeps (bidirectional) turns scores
into alignment probabilities; optional relation-lexicon and syntactic
rules add a constant boost to cells they mark. Training minimizes
cross-entropy against gold alignments with exact reverse-mode gradients.
"""

from .corpus import (
    Chunk,
    ChunkedPair,
    GoldAlignment,
    Token,
    load_canonical,
    parse_wa,
    save_canonical,
    validate,
)
from .embed import (
    ChunkVector,
    ContextualAnnotation,
    EmbeddingTable,
    chunk_boundary,
    chunk_mean,
    load_annotations,
    load_vectors,
    pair_chunk_vectors,
)
from .evaluate import DecodedAlignment, ScoreReport, decode, evaluate_corpus, f1
from .net import GateVectors, PointerParams, ScoreMatrix, forward_unidirectional, gates, score_matrix
from .ot import CostMatrix, SinkhornConfig, TransportPlan, build_cost, sinkhorn, sinkhorn_backward
from .rules import (
    ConstraintMatrix,
    RelationLexicon,
    SynSimConfig,
    apply_constraints,
    build_constraints,
    chunk_syn_sim,
    load_triples,
    rel_predicate,
    word_syn_sim,
)
from .synthetic import SyntheticSpec, generate
from .train import (
    GradientReport,
    LossConfig,
    TrainConfig,
    fit,
    gradient_check,
    gradients,
    grid_search,
    loss_bidirectional,
    loss_unidirectional,
)

__version__ = "0.1.0"

__all__ = [
    "Chunk", "ChunkedPair", "GoldAlignment", "Token",
    "parse_wa", "load_canonical", "save_canonical", "validate",
    "EmbeddingTable", "ContextualAnnotation", "ChunkVector",
    "load_vectors", "load_annotations", "chunk_mean", "chunk_boundary", "pair_chunk_vectors",
    "PointerParams", "ScoreMatrix", "GateVectors",
    "score_matrix", "gates", "forward_unidirectional",
    "CostMatrix", "SinkhornConfig", "TransportPlan",
    "build_cost", "sinkhorn", "sinkhorn_backward",
    "RelationLexicon", "SynSimConfig", "ConstraintMatrix",
    "load_triples", "rel_predicate", "word_syn_sim", "chunk_syn_sim",
    "build_constraints", "apply_constraints",
    "LossConfig", "TrainConfig", "GradientReport",
    "loss_unidirectional", "loss_bidirectional", "gradients", "gradient_check", "fit", "grid_search",
    "DecodedAlignment", "ScoreReport", "decode", "f1", "evaluate_corpus",
    "SyntheticSpec", "generate",
    "__version__",
]
