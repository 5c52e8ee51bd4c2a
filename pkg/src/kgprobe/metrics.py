"""Graph-use metrics: entity recall, relation fidelity, and term coverage.

All three provided-graph metrics score a hypothesis against the graph
actually supplied in a condition. Degenerate conditions follow fixed
conventions: a variant with no supplied objects (no-KG) scores 0 on all
three; an entity-only variant has no relation roles so its relation
fidelity is 0; a relation-skeleton variant masks entity identity so entity
recall and term coverage are 0 while relation fidelity stays live.
Fixed-reference variants score the same hypothesis against the untouched
full graph, which makes every condition comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from kgprobe.errors import SchemaValidationError
from kgprobe.kg_core import LocalGraph, RelationRole
from kgprobe.text import normalize_phrase, normalize_terms
from kgprobe.variants import KgVariant

# Re-exported here because scoring and distance belong to the same metric
# surface (see embedding module for the providers themselves).
from kgprobe.embedding import embed, semantic_distance  # noqa: F401


@dataclass(frozen=True)
class RoleInventory:
    """Cue words/phrases signalling each relation role in generated text."""

    cues: dict[RelationRole, tuple[str, ...]]

    def __post_init__(self):
        for role, words in self.cues.items():
            if not words:
                raise SchemaValidationError(
                    f"cue inventory for role {role.value!r} is empty", field=role.value
                )

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "RoleInventory":
        return cls(
            cues={RelationRole(role): tuple(words) for role, words in cfg.items()}
        )

    def for_role(self, role: RelationRole) -> tuple[str, ...]:
        if role not in self.cues:
            raise SchemaValidationError(
                f"no cue inventory configured for role {role.value!r}",
                field=role.value,
            )
        return self.cues[role]


def _supplied_objects(variant: KgVariant) -> list[str]:
    """Deduplicated object strings supplied by a variant, in source order."""
    if variant.entity_only:
        return list(variant.objects or ())
    seen: list[str] = []
    for t in variant.triples:
        if t.object not in seen:
            seen.append(t.object)
    return seen


def _contains_phrase(haystack_norm: str, phrase: str) -> bool:
    needle = normalize_phrase(phrase)
    return bool(needle) and needle in haystack_norm


def trr(hypothesis: str, variant: KgVariant) -> float:
    """Fraction of supplied object entities appearing in the hypothesis.

    Containment is whole-phrase, case-insensitive substring matching after
    punctuation and whitespace normalization. Masked (relation-skeleton)
    variants score 0 by convention: placeholders denote no recallable entity.
    """
    if variant.masked:
        return 0.0
    objects = _supplied_objects(variant)
    if not objects:
        return 0.0
    hy = normalize_phrase(hypothesis)
    hits = sum(1 for o in objects if _contains_phrase(hy, o))
    return hits / len(objects)


def rfs(hypothesis: str, variant: KgVariant, inventory: RoleInventory) -> float:
    """Fraction of supplied relation roles whose cue language appears.

    A role counts as expressed when any of its cues occurs as a substring of
    the normalized hypothesis (multi-word cues match as contiguous phrases).
    Entity-only variants supply no roles and score 0 by convention.
    """
    roles = sorted({t.role for t in variant.triples}, key=lambda r: r.value)
    if not roles:
        return 0.0
    hy = normalize_phrase(hypothesis)
    hits = sum(
        1
        for role in roles
        if any(_contains_phrase(hy, cue) for cue in inventory.for_role(role))
    )
    return hits / len(roles)


def ktc(
    hypothesis: str, variant: KgVariant, stopwords: frozenset[str] | None = None
) -> float:
    """Fraction of supplied object-side content words covered by the hypothesis."""
    if variant.masked:
        return 0.0
    object_terms: set[str] = set()
    for o in _supplied_objects(variant):
        object_terms |= normalize_terms(o, stopwords)
    if not object_terms:
        return 0.0
    return len(object_terms & normalize_terms(hypothesis, stopwords)) / len(object_terms)


def _as_full_variant(full_graph: LocalGraph) -> KgVariant:
    return KgVariant(
        problem_id=full_graph.problem_id,
        condition="full",
        triples=full_graph.triples,
    )


def fixed_reference(
    hypothesis: str,
    full_graph: LocalGraph,
    which: str,
    inventory: RoleInventory | None = None,
    stopwords: frozenset[str] | None = None,
) -> float:
    """Score a hypothesis against the untouched full graph.

    Defined for every condition's output, including no-KG ones, so that
    recovery from model priors is visible.
    """
    full = _as_full_variant(full_graph)
    if which == "trr":
        return trr(hypothesis, full)
    if which == "ktc":
        return ktc(hypothesis, full, stopwords)
    if which == "rfs":
        if inventory is None:
            raise ValueError("fixed_reference('rfs') requires a cue inventory")
        return rfs(hypothesis, full, inventory)
    raise ValueError(f"unknown metric {which!r}")


def mech_int_coverage(
    hypothesis: str,
    full_graph: LocalGraph,
    stopwords: frozenset[str] | None = None,
) -> float | None:
    """Term coverage restricted to mechanism/intervention objects.

    Returns None (an undefined marker, excluded from aggregation) when the
    full graph has no mechanism or intervention triples.
    """
    focus = {RelationRole.MECHANISM, RelationRole.INTERVENTION}
    object_terms: set[str] = set()
    present = False
    for t in full_graph.triples:
        if t.role in focus:
            present = True
            object_terms |= normalize_terms(t.object, stopwords)
    if not present or not object_terms:
        return None
    return len(object_terms & normalize_terms(hypothesis, stopwords)) / len(object_terms)


@dataclass(frozen=True)
class ScoreRecord:
    """Per-generation metric values."""

    problem_id: str
    condition: str
    model_name: str
    sample_index: int
    trr: float
    rfs: float
    ktc: float
    trr_ref: float
    rfs_ref: float
    ktc_ref: float
    mech_int_coverage: float | None
    d_sem_to_full: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem_id": self.problem_id,
            "condition": self.condition,
            "model_name": self.model_name,
            "sample_index": self.sample_index,
            "trr": self.trr,
            "rfs": self.rfs,
            "ktc": self.ktc,
            "trr_ref": self.trr_ref,
            "rfs_ref": self.rfs_ref,
            "ktc_ref": self.ktc_ref,
            "mech_int_coverage": self.mech_int_coverage,
            "d_sem_to_full": self.d_sem_to_full,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScoreRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def score_hypothesis(
    hypothesis: str,
    variant: KgVariant,
    full_graph: LocalGraph,
    inventory: RoleInventory,
    *,
    model_name: str,
    sample_index: int = 0,
    reference_hypothesis: str | None = None,
    embedder=None,
    stopwords: frozenset[str] | None = None,
) -> ScoreRecord:
    """Compute the full metric suite for one generated hypothesis."""
    d_sem = None
    if reference_hypothesis is not None and embedder is not None:
        d_sem = semantic_distance(hypothesis, reference_hypothesis, embedder)
    return ScoreRecord(
        problem_id=variant.problem_id,
        condition=variant.condition,
        model_name=model_name,
        sample_index=sample_index,
        trr=trr(hypothesis, variant),
        rfs=rfs(hypothesis, variant, inventory),
        ktc=ktc(hypothesis, variant, stopwords),
        trr_ref=fixed_reference(hypothesis, full_graph, "trr"),
        rfs_ref=fixed_reference(hypothesis, full_graph, "rfs", inventory),
        ktc_ref=fixed_reference(hypothesis, full_graph, "ktc", stopwords=stopwords),
        mech_int_coverage=mech_int_coverage(hypothesis, full_graph, stopwords),
        d_sem_to_full=d_sem,
    )
