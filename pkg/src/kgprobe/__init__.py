"""kgprobe: build per-problem knowledge graphs, perturb them, drive a
generation backend, and score outputs with graph-use metrics and
resampling statistics."""

from kgprobe.kg_core import (
    LocalGraph,
    ProblemRecord,
    RelationRole,
    Triple,
    build_local_graph,
    corpus_stats,
    validate_graph,
)
from kgprobe.variants import KgVariant, apply_condition, parse_condition, rank_triples
from kgprobe.verbalize import Prompt, PromptContext, assemble_prompt, verbalize_triples
from kgprobe.backends import BackendSpec, GenerationRecord, generate
from kgprobe.metrics import (
    RoleInventory,
    ScoreRecord,
    fixed_reference,
    ktc,
    mech_int_coverage,
    rfs,
    score_hypothesis,
    trr,
)
from kgprobe.embedding import FallbackEmbedder, semantic_distance
from kgprobe.stats import bootstrap_ci, correct_pvalues, paired_permutation

__version__ = "0.1.0"

__all__ = [
    "BackendSpec",
    "FallbackEmbedder",
    "GenerationRecord",
    "KgVariant",
    "LocalGraph",
    "Prompt",
    "PromptContext",
    "ProblemRecord",
    "RelationRole",
    "RoleInventory",
    "ScoreRecord",
    "Triple",
    "apply_condition",
    "assemble_prompt",
    "bootstrap_ci",
    "build_local_graph",
    "correct_pvalues",
    "corpus_stats",
    "fixed_reference",
    "generate",
    "ktc",
    "mech_int_coverage",
    "paired_permutation",
    "parse_condition",
    "rank_triples",
    "rfs",
    "score_hypothesis",
    "semantic_distance",
    "trr",
    "validate_graph",
    "verbalize_triples",
]
