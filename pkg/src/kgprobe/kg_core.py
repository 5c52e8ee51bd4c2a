"""Problem records, per-problem local knowledge graphs, and corpus size statistics.

A local graph is built from the structured fields of one scientific problem
record. The expansion recipe is fully driven by a :class:`GraphSchema`: each
field emits one triple per value, optional ``type_of`` entries add a
classification triple per value, and chain fields additionally emit a triple
linking each value to the first value of another field, which places those
values on 2-hop paths from the problem node.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from kgprobe.errors import SchemaValidationError


class RelationRole(str, Enum):
    """Scientific function a triple plays in the local graph."""

    FAILURE = "failure"
    INTERVENTION = "intervention"
    MECHANISM = "mechanism"
    PROPERTY = "property"
    COMPONENT = "component"
    SYSTEM = "system"
    OUTCOME = "outcome"


#: Structured fields every problem record must carry, in canonical order.
PROBLEM_FIELDS = (
    "material_system",
    "component",
    "failure_mode",
    "intervention",
    "mechanism",
    "target_property",
    "claimed_outcome",
)


def normalize_node(label: str) -> str:
    """Node identity: lowercased, trimmed, inner whitespace collapsed."""
    return " ".join(label.lower().split())


@dataclass(frozen=True, slots=True)
class ProblemRecord:
    """One scientific problem with its structured fields."""

    id: str
    problem_statement: str
    material_system: str
    component: str
    failure_mode: str
    intervention: str
    mechanism: str
    target_property: str
    claimed_outcome: str

    def __post_init__(self):
        if not self.id.strip():
            raise SchemaValidationError("problem id must be non-empty", field="id")
        if not self.problem_statement.strip():
            raise SchemaValidationError(
                f"problem {self.id!r}: problem_statement must be non-empty",
                field="problem_statement",
            )

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ProblemRecord":
        for name in ("id", "problem_statement") + PROBLEM_FIELDS:
            if name not in d or not str(d[name]).strip():
                raise SchemaValidationError(
                    f"problem record missing required field {name!r}", field=name
                )
        return cls(**{k: str(d[k]) for k in ("id", "problem_statement") + PROBLEM_FIELDS})

    def to_dict(self) -> dict[str, str]:
        return {k: getattr(self, k) for k in ("id", "problem_statement") + PROBLEM_FIELDS}


@dataclass(frozen=True, slots=True)
class Triple:
    """A directed subject-relation-object edge with its semantic role."""

    subject: str
    relation: str
    role: RelationRole
    object: str

    def __post_init__(self):
        if not (self.subject and self.relation and self.object):
            raise SchemaValidationError("triple fields must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {
            "subject": self.subject,
            "relation": self.relation,
            "role": self.role.value,
            "object": self.object,
        }

    @classmethod
    def from_dict(cls, d: dict[str, str]) -> "Triple":
        return cls(d["subject"], d["relation"], RelationRole(d["role"]), d["object"])


@dataclass(frozen=True, slots=True)
class LocalGraph:
    """Per-problem directed typed KG; triple order is deterministic."""

    problem_id: str
    tier: str  # "T1" | "T3"
    triples: tuple[Triple, ...]

    @property
    def problem_node(self) -> str:
        return normalize_node(self.problem_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem_id": self.problem_id,
            "tier": self.tier,
            "triples": [t.to_dict() for t in self.triples],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "LocalGraph":
        return cls(
            problem_id=d["problem_id"],
            tier=d["tier"],
            triples=tuple(Triple.from_dict(t) for t in d["triples"]),
        )


@dataclass(frozen=True)
class RelationInfo:
    """Both-tier labels and the role for one relation label."""

    role: RelationRole
    t1: str
    t3: str


@dataclass(frozen=True)
class ChainSpec:
    """Chain expansion: each field value links to the first value of ``target``."""

    relation_t1: str
    relation_t3: str
    target: str


@dataclass(frozen=True)
class TypeSpec:
    """Optional classification triple: (value, relation, label) per value."""

    relation_t1: str
    relation_t3: str
    label: str


@dataclass(frozen=True)
class FieldSpec:
    name: str
    role: RelationRole
    t1: str
    t3: str
    chain: ChainSpec | None = None
    type_of: TypeSpec | None = None


@dataclass(frozen=True)
class GraphSchema:
    """Field-to-triple expansion rules plus the relation-label map."""

    fields: tuple[FieldSpec, ...]
    delimiter: str = "; "
    tier: str = "T3"

    def __post_init__(self):
        names = [f.name for f in self.fields]
        missing = [n for n in PROBLEM_FIELDS if n not in names]
        if missing:
            raise SchemaValidationError(
                f"schema does not cover problem fields: {missing}", field=missing[0]
            )

    @property
    def relation_map(self) -> dict[str, RelationInfo]:
        """Label -> (role, t1, t3) for every label either tier can produce.

        The base field entry registers first, so a coarse T1 label shared by
        chain/type triples relabels back to the base field's T3 label.
        """
        out: dict[str, RelationInfo] = {}

        def register(t1: str, t3: str, role: RelationRole):
            info = RelationInfo(role=role, t1=t1, t3=t3)
            out.setdefault(t3, info)
            out.setdefault(t1, info)

        for f in self.fields:
            register(f.t1, f.t3, f.role)
            if f.chain is not None:
                register(f.chain.relation_t1, f.chain.relation_t3, f.role)
            if f.type_of is not None:
                register(f.type_of.relation_t1, f.type_of.relation_t3, f.role)
        return out

    def role_of(self, relation: str) -> RelationRole:
        info = self.relation_map.get(relation)
        if info is None:
            raise SchemaValidationError(f"unmapped relation label {relation!r}")
        return info.role

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "GraphSchema":
        fields = []
        for fc in cfg["fields"]:
            chain = None
            if fc.get("chain"):
                chain = ChainSpec(
                    relation_t1=fc["chain"]["relation_t1"],
                    relation_t3=fc["chain"]["relation_t3"],
                    target=fc["chain"]["target"],
                )
            type_of = None
            if fc.get("type_of"):
                type_of = TypeSpec(
                    relation_t1=fc["type_of"]["relation_t1"],
                    relation_t3=fc["type_of"]["relation_t3"],
                    label=fc["type_of"]["label"],
                )
            fields.append(
                FieldSpec(
                    name=fc["name"],
                    role=RelationRole(fc["role"]),
                    t1=fc["t1"],
                    t3=fc["t3"],
                    chain=chain,
                    type_of=type_of,
                )
            )
        return cls(
            fields=tuple(fields),
            delimiter=cfg.get("delimiter", "; "),
            tier=cfg.get("tier", "T3"),
        )


def split_values(raw: str, delimiter: str) -> list[str]:
    return [normalize_node(v) for v in raw.split(delimiter) if v.strip()]


def build_local_graph(problem: ProblemRecord, schema: GraphSchema) -> LocalGraph:
    """Expand a problem's structured fields into its local graph.

    Triple order is deterministic: schema field order, then value order, with
    each field's chain/type triples emitted directly after its base triples.
    Exact duplicate (subject, relation, object) entries are dropped, keeping
    the first occurrence.
    """
    node = normalize_node(problem.id)
    rich = schema.tier == "T3"
    values: dict[str, list[str]] = {}
    for spec in schema.fields:
        vals = split_values(getattr(problem, spec.name), schema.delimiter)
        if not vals:
            raise SchemaValidationError(
                f"problem {problem.id!r}: field {spec.name!r} is empty", field=spec.name
            )
        values[spec.name] = vals

    triples: list[Triple] = []
    seen: set[tuple[str, str, str]] = set()

    def emit(subject: str, relation: str, obj: str, role: RelationRole):
        key = (subject, relation, obj)
        if key in seen:
            return
        seen.add(key)
        triples.append(Triple(subject, relation, role, obj))

    for spec in schema.fields:
        rel = spec.t3 if rich else spec.t1
        for v in values[spec.name]:
            emit(node, rel, v, spec.role)
        if spec.type_of is not None:
            trel = spec.type_of.relation_t3 if rich else spec.type_of.relation_t1
            for v in values[spec.name]:
                emit(v, trel, normalize_node(spec.type_of.label), spec.role)
        if spec.chain is not None:
            crel = spec.chain.relation_t3 if rich else spec.chain.relation_t1
            target = values[spec.chain.target][0]
            for v in values[spec.name]:
                if v != target:
                    emit(v, crel, target, spec.role)

    if not triples:
        raise SchemaValidationError(f"problem {problem.id!r} expanded to zero triples")
    return LocalGraph(problem_id=problem.id, tier=schema.tier, triples=tuple(triples))


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    message: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def __bool__(self) -> bool:  # non-empty report means something to show
        return bool(self.issues)


def validate_graph(graph: LocalGraph, schema: GraphSchema | None = None) -> ValidationReport:
    """Report invariant violations; an empty report means the graph is clean."""
    report = ValidationReport()
    seen: set[tuple[str, str, str]] = set()
    for t in graph.triples:
        key = (t.subject, t.relation, t.object)
        if key in seen:
            report.issues.append(
                ValidationIssue("error", f"duplicate triple {key}")
            )
        seen.add(key)
    node = graph.problem_node
    if not any(t.subject == node for t in graph.triples):
        report.issues.append(
            ValidationIssue("error", f"problem node {node!r} is never a subject")
        )
    n = len(graph.triples)
    if n < 15:
        report.issues.append(ValidationIssue("warning", f"triple count {n} below 15"))
    elif n > 18:
        report.issues.append(ValidationIssue("warning", f"triple count {n} above 18"))
    if schema is not None:
        rmap = schema.relation_map
        for t in graph.triples:
            info = rmap.get(t.relation)
            if info is None:
                report.issues.append(
                    ValidationIssue("error", f"unroleable relation {t.relation!r}")
                )
            elif info.role is not t.role:
                report.issues.append(
                    ValidationIssue(
                        "error",
                        f"role mismatch for {t.relation!r}: "
                        f"{t.role.value} != {info.role.value}",
                    )
                )
    return report


@dataclass(frozen=True)
class KgSizeStats:
    """Corpus-level triple-count statistics."""

    n_problems: int
    mean_triples: float
    median_triples: float
    std: float
    min: int
    max: int
    topk_fraction: dict[int, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_problems": self.n_problems,
            "mean_triples": self.mean_triples,
            "median_triples": self.median_triples,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "topk_fraction": {str(k): v for k, v in self.topk_fraction.items()},
        }


def corpus_stats(corpus: Sequence[LocalGraph], ks: Iterable[int] = (4, 8)) -> KgSizeStats:
    """Exact arithmetic over triple counts.

    ``topk_fraction[k]`` is the mean over problems of ``min(k, n) / n``.
    Uses the population standard deviation.
    """
    if not corpus:
        raise ValueError("corpus_stats requires a non-empty corpus")
    counts = [len(g.triples) for g in corpus]
    fractions = {
        k: sum(min(k, n) / n for n in counts) / len(counts) for k in ks
    }
    return KgSizeStats(
        n_problems=len(counts),
        mean_triples=sum(counts) / len(counts),
        median_triples=float(statistics.median(counts)),
        std=statistics.pstdev(counts),
        min=min(counts),
        max=max(counts),
        topk_fraction=fractions,
    )


# ---------------------------------------------------------------------------
# JSON / JSONL interfaces


def load_problems(path: str | Path) -> list[ProblemRecord]:
    """Read one ProblemRecord JSON object per line; ids must be unique."""
    problems: list[ProblemRecord] = []
    ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = ProblemRecord.from_dict(json.loads(line))
            except SchemaValidationError as exc:
                raise SchemaValidationError(
                    f"{path}:{lineno}: {exc}", field=exc.field
                ) from exc
            if rec.id in ids:
                raise SchemaValidationError(
                    f"{path}:{lineno}: duplicate problem id {rec.id!r}", field="id"
                )
            ids.add(rec.id)
            problems.append(rec)
    if not problems:
        raise SchemaValidationError(f"{path}: no problem records found")
    return problems


def save_problems(problems: Iterable[ProblemRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in problems:
            fh.write(json.dumps(p.to_dict()) + "\n")


def save_graph(graph: LocalGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(graph.to_dict(), fh, indent=2)
        fh.write("\n")


def load_graph(path: str | Path) -> LocalGraph:
    with open(path, encoding="utf-8") as fh:
        return LocalGraph.from_dict(json.load(fh))
