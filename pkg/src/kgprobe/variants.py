"""Every KG condition: density, ontology, topology, controls, top-k, knockouts.

Conditions are named by a tag grammar (exact strings)::

    no_kg
    density:{sparse|medium|dense}
    ontology:{t1|t3}
    topology:{2hop|full_path}
    control:{random|shuffled|entity_only|rel_skeleton}
    topk:{semantic|random|degree|betweenness|pagerank}:<k>
    rmtopk:{semantic|random|degree|betweenness|pagerank}:<k>
    holdout:outcome
    knockout:{bridge|peripheral|random|role.<role>}:<count>

Tags compose with ``+`` and apply left to right, e.g.
``topk:semantic:8+holdout:outcome``. ``rmtopk`` is the comprehensiveness
complement of ``topk``: it removes the selected triples instead of keeping
them. Every variant carries provenance sufficient to regenerate it
bit-exactly from the source graph (and corpus, for the random control).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Sequence

from kgprobe.centrality import (
    betweenness_centrality,
    degree_centrality,
    edge_betweenness,
    pagerank,
)
from kgprobe.errors import ConditionError, SchemaValidationError
from kgprobe.kg_core import GraphSchema, LocalGraph, RelationRole, Triple
from kgprobe.text import normalize_terms

BOOST_ROLES = frozenset(
    {RelationRole.MECHANISM, RelationRole.FAILURE, RelationRole.INTERVENTION}
)
ROLE_BOOST = 1.3

DENSITY_LEVELS = ("sparse", "medium", "dense")
TOPOLOGY_MODES = ("2hop", "full_path")
CONTROL_KINDS = ("random", "shuffled", "entity_only", "rel_skeleton")
SELECTORS = ("semantic", "random", "degree", "betweenness", "pagerank")
KNOCKOUT_KINDS = ("bridge", "peripheral", "random")


@dataclass(frozen=True)
class TripleScore:
    """Relevance of one triple to the problem statement."""

    triple_index: int
    score: float
    overlap: float
    boost: float

    @property
    def components(self) -> tuple[float, float]:
        return (self.overlap, self.boost)


@dataclass(frozen=True)
class KgVariant:
    """One named KG condition derived from a source graph."""

    problem_id: str
    condition: str
    triples: tuple[Triple, ...]
    objects: tuple[str, ...] | None = None  # entity-only payload
    expanded: bool = False
    masked: bool = False
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def entity_only(self) -> bool:
        return self.objects is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem_id": self.problem_id,
            "condition": self.condition,
            "triples": [t.to_dict() for t in self.triples],
            "objects": list(self.objects) if self.objects is not None else None,
            "expanded": self.expanded,
            "masked": self.masked,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "KgVariant":
        return cls(
            problem_id=d["problem_id"],
            condition=d["condition"],
            triples=tuple(Triple.from_dict(t) for t in d["triples"]),
            objects=tuple(d["objects"]) if d.get("objects") is not None else None,
            expanded=bool(d.get("expanded", False)),
            masked=bool(d.get("masked", False)),
            provenance=d.get("provenance", {}),
        )


def rank_triples(
    graph: LocalGraph | Sequence[Triple],
    problem_statement: str,
    stopwords: frozenset[str] | None = None,
) -> list[TripleScore]:
    """Deterministic relevance ranking of triples against the problem statement.

    Score = (|words(object) ∩ words(statement)| / |words(object)|) * boost,
    with boost 1.3 for mechanism/failure/intervention roles and 1.0 otherwise.
    Words are normalized content words. Ties keep source order.
    """
    if not problem_statement.strip():
        raise ValueError("problem_statement must be non-empty")
    triples = graph.triples if isinstance(graph, LocalGraph) else tuple(graph)
    statement_words = normalize_terms(problem_statement, stopwords)
    scores = []
    for idx, t in enumerate(triples):
        obj_words = normalize_terms(t.object, stopwords)
        overlap = len(obj_words & statement_words) / len(obj_words) if obj_words else 0.0
        boost = ROLE_BOOST if t.role in BOOST_ROLES else 1.0
        scores.append(
            TripleScore(triple_index=idx, score=overlap * boost, overlap=overlap, boost=boost)
        )
    return sorted(scores, key=lambda s: -s.score)


# ---------------------------------------------------------------------------
# Condition tag grammar


@dataclass(frozen=True)
class AtomicCondition:
    op: str
    params: dict[str, Any]


def parse_condition(tag: str) -> list[AtomicCondition]:
    """Parse a (possibly composed) condition tag; raises ConditionError."""
    if not tag or tag != tag.strip():
        raise ConditionError(f"malformed condition tag {tag!r}")
    atoms = []
    parts = tag.split("+")
    for pos, part in enumerate(parts):
        atoms.append(_parse_atom(part, tag))
        if atoms[-1].op == "no_kg" and len(parts) > 1:
            raise ConditionError("no_kg cannot be composed with other conditions")
        if atoms[-1].op == "control" and atoms[-1].params.get("kind") == "entity_only":
            if pos != len(parts) - 1:
                raise ConditionError("control:entity_only must be the last step")
    return atoms


def _parse_atom(part: str, tag: str) -> AtomicCondition:
    bits = part.split(":")
    op = bits[0]
    if op == "no_kg" and len(bits) == 1:
        return AtomicCondition("no_kg", {})
    if op == "density" and len(bits) == 2 and bits[1] in DENSITY_LEVELS:
        return AtomicCondition("density", {"level": bits[1]})
    if op == "ontology" and len(bits) == 2 and bits[1] in ("t1", "t3"):
        return AtomicCondition("ontology", {"tier": bits[1].upper()})
    if op == "topology" and len(bits) == 2 and bits[1] in TOPOLOGY_MODES:
        return AtomicCondition("topology", {"mode": bits[1]})
    if op == "control" and len(bits) == 2 and bits[1] in CONTROL_KINDS:
        return AtomicCondition("control", {"kind": bits[1]})
    if op in ("topk", "rmtopk") and len(bits) == 3 and bits[1] in SELECTORS:
        k = _parse_count(bits[2], tag)
        if k < 1:
            raise ConditionError(f"{tag!r}: k must be >= 1")
        return AtomicCondition(op, {"selector": bits[1], "k": k})
    if op == "holdout" and len(bits) == 2 and bits[1] == "outcome":
        return AtomicCondition("holdout", {})
    if op == "knockout" and len(bits) == 3:
        kind = bits[1]
        count = _parse_count(bits[2], tag)
        if kind in KNOCKOUT_KINDS:
            return AtomicCondition("knockout", {"kind": kind, "count": count})
        if kind.startswith("role."):
            role_name = kind[len("role."):]
            try:
                role = RelationRole(role_name)
            except ValueError:
                raise ConditionError(f"{tag!r}: unknown role {role_name!r}") from None
            return AtomicCondition("knockout", {"kind": "role", "role": role, "count": count})
    raise ConditionError(f"unknown condition tag component {part!r} in {tag!r}")


def _parse_count(text: str, tag: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConditionError(f"{tag!r}: expected an integer, got {text!r}") from None


# ---------------------------------------------------------------------------
# Application machinery


@dataclass
class _State:
    source: LocalGraph
    entries: list[tuple[int, Triple]]
    expanded: bool = False
    objects: tuple[str, ...] | None = None
    masked: bool = False

    @property
    def triples(self) -> list[Triple]:
        return [t for _, t in self.entries]


@dataclass
class _Context:
    problem_statement: str
    schema: GraphSchema | None = None
    corpus: Sequence[LocalGraph] | None = None
    seed: int = 0
    stopwords: frozenset[str] | None = None
    sparse_fraction: float = 0.25
    medium_fraction: float = 0.5
    match_count: int | None = None  # overrides control:random's matched size

    def relation_map(self):
        if self.schema is None:
            raise ConditionError("this condition requires a graph schema")
        return self.schema.relation_map


def apply_condition(
    graph: LocalGraph,
    tag: str,
    *,
    problem_statement: str,
    schema: GraphSchema | None = None,
    corpus: Sequence[LocalGraph] | None = None,
    seed: int = 0,
    stopwords: frozenset[str] | None = None,
    sparse_fraction: float = 0.25,
    medium_fraction: float = 0.5,
) -> KgVariant:
    """Apply a condition tag to a source graph and return the variant."""
    atoms = parse_condition(tag)
    ctx = _Context(
        problem_statement=problem_statement,
        schema=schema,
        corpus=corpus,
        seed=seed,
        stopwords=stopwords,
        sparse_fraction=sparse_fraction,
        medium_fraction=medium_fraction,
    )
    state = _State(source=graph, entries=list(enumerate(graph.triples)))
    steps: list[dict[str, Any]] = []
    for step_idx, atom in enumerate(atoms):
        rng = random.Random(ctx.seed + step_idx)
        steps.append(_apply_atom(state, atom, ctx, rng, recorded=None))
    return _finalize(graph, tag, state, steps, seed)


def regenerate_variant(
    graph: LocalGraph,
    provenance: dict[str, Any],
    corpus: Sequence[LocalGraph] | None = None,
    schema: GraphSchema | None = None,
) -> KgVariant:
    """Replay recorded provenance steps; no randomness is re-drawn."""
    tag = provenance["condition"]
    atoms = parse_condition(tag)
    ctx = _Context(
        problem_statement=provenance.get("problem_statement", "-"),
        schema=schema,
        corpus=corpus,
    )
    state = _State(source=graph, entries=list(enumerate(graph.triples)))
    steps: list[dict[str, Any]] = []
    for atom, recorded in zip(atoms, provenance["steps"]):
        steps.append(_apply_atom(state, atom, ctx, random.Random(0), recorded=recorded))
    return _finalize(graph, tag, state, steps, provenance.get("seed", 0))


def _finalize(graph, tag, state, steps, seed) -> KgVariant:
    return KgVariant(
        problem_id=graph.problem_id,
        condition=tag,
        triples=tuple(state.triples),
        objects=state.objects,
        expanded=state.expanded,
        masked=state.masked,
        provenance={"condition": tag, "seed": seed, "steps": steps},
    )


def _apply_atom(state, atom, ctx, rng, recorded) -> dict[str, Any]:
    if state.objects is not None:
        raise ConditionError("no condition may follow control:entity_only")
    handler = {
        "no_kg": _step_no_kg,
        "density": _step_density,
        "ontology": _step_ontology,
        "topology": _step_topology,
        "control": _step_control,
        "topk": _step_topk,
        "rmtopk": _step_rmtopk,
        "holdout": _step_holdout,
        "knockout": _step_knockout,
    }[atom.op]
    return handler(state, atom.params, ctx, rng, recorded)


def _keep_positions(state: _State, positions: Sequence[int]) -> None:
    keep = sorted(positions)
    state.entries = [state.entries[i] for i in keep]


def _step_no_kg(state, params, ctx, rng, recorded):
    state.entries = []
    return {"op": "no_kg"}


def _ranked_positions(state: _State, ctx: _Context) -> list[int]:
    scores = rank_triples(state.triples, ctx.problem_statement, ctx.stopwords)
    return [s.triple_index for s in scores]


def _step_density(state, params, ctx, rng, recorded):
    level = params["level"]
    if level == "dense":
        state.expanded = True
        return {"op": "density", "level": "dense", "kept": list(range(len(state.entries)))}
    if recorded is not None:
        kept = recorded["kept"]
    else:
        n = len(state.entries)
        frac = ctx.sparse_fraction if level == "sparse" else ctx.medium_fraction
        k = min(n, math.ceil(n * frac))
        kept = sorted(_ranked_positions(state, ctx)[:k])
    _keep_positions(state, kept)
    return {"op": "density", "level": level, "kept": list(kept)}


def _step_ontology(state, params, ctx, rng, recorded):
    tier = params["tier"]
    rmap = ctx.relation_map()
    relabeled = []
    for idx, t in state.entries:
        info = rmap.get(t.relation)
        if info is None:
            raise SchemaValidationError(f"unmapped relation label {t.relation!r}")
        label = info.t1 if tier == "T1" else info.t3
        relabeled.append((idx, Triple(t.subject, label, t.role, t.object)))
    state.entries = relabeled
    return {"op": "ontology", "tier": tier}


def _bfs_depths(entries: Sequence[tuple[int, Triple]], start: str) -> dict[str, int]:
    succ: dict[str, set[str]] = {}
    for _, t in entries:
        succ.setdefault(t.subject, set()).add(t.object)
    depths = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in sorted(succ.get(u, ())):
                if v not in depths:
                    depths[v] = depths[u] + 1
                    nxt.append(v)
        frontier = nxt
    return depths


def _step_topology(state, params, ctx, rng, recorded):
    mode = params["mode"]
    depths = _bfs_depths(state.entries, state.source.problem_node)
    kept = []
    for pos, (_, t) in enumerate(state.entries):
        if mode == "2hop":
            ds, do = depths.get(t.subject), depths.get(t.object)
            if ds is not None and do is not None and ds <= 2 and do <= 2:
                kept.append(pos)
        else:  # full_path: every triple extending a directed path from the problem node
            if t.subject in depths:
                kept.append(pos)
    _keep_positions(state, kept)
    return {"op": "topology", "mode": mode, "kept": kept}


def _step_control(state, params, ctx, rng, recorded):
    kind = params["kind"]
    if kind == "random":
        return _control_random(state, ctx, rng, recorded)
    if kind == "shuffled":
        return _control_shuffled(state, ctx, rng, recorded)
    if kind == "entity_only":
        seen: list[str] = []
        for t in state.triples:
            if t.object not in seen:
                seen.append(t.object)
        state.objects = tuple(seen)
        state.entries = []
        return {"op": "control:entity_only", "objects": seen}
    # rel_skeleton
    return _control_skeleton(state)


def _control_random(state, ctx, rng, recorded):
    match_count = ctx.match_count if ctx.match_count is not None else len(state.entries)
    if recorded is not None:
        donor_id = recorded["donor"]
        indices = recorded["donor_indices"]
        donors = {g.problem_id: g for g in (ctx.corpus or ())}
        if donor_id not in donors:
            raise ConditionError(f"donor graph {donor_id!r} not in corpus")
        donor = donors[donor_id]
    else:
        if not ctx.corpus:
            raise ConditionError("control:random requires a corpus of donor graphs")
        eligible = sorted(
            (
                g
                for g in ctx.corpus
                if g.problem_id != state.source.problem_id
                and len(g.triples) >= match_count
            ),
            key=lambda g: g.problem_id,
        )
        if not eligible:
            raise ConditionError(
                f"no eligible donor with >= {match_count} triples for "
                f"{state.source.problem_id!r}"
            )
        donor = eligible[rng.randrange(len(eligible))]
        indices = sorted(rng.sample(range(len(donor.triples)), match_count))
    state.entries = [(i, donor.triples[i]) for i in indices]
    return {
        "op": "control:random",
        "donor": donor.problem_id,
        "donor_indices": list(indices),
        "match_count": match_count,
    }


def _control_shuffled(state, ctx, rng, recorded):
    labels = [t.relation for t in state.triples]
    if len(set(labels)) < 2:
        raise ConditionError("shuffle requires at least 2 distinct relation labels")
    n = len(labels)
    if recorded is not None:
        perm = recorded["permutation"]
    else:
        perm = None
        for _ in range(100):  # prefer a full derangement of label values
            cand = list(range(n))
            rng.shuffle(cand)
            if all(labels[cand[i]] != labels[i] for i in range(n)):
                perm = cand
                break
        if perm is None:
            for _ in range(100):  # fall back to any value-changing permutation
                cand = list(range(n))
                rng.shuffle(cand)
                if any(labels[cand[i]] != labels[i] for i in range(n)):
                    perm = cand
                    break
        if perm is None:  # guaranteed non-identity: swap two differing labels
            i = 0
            j = next(j for j in range(n) if labels[j] != labels[0])
            perm = list(range(n))
            perm[i], perm[j] = perm[j], perm[i]
    rmap = ctx.relation_map()
    shuffled = []
    for pos, (idx, t) in enumerate(state.entries):
        label = labels[perm[pos]]
        info = rmap.get(label)
        if info is None:
            raise SchemaValidationError(f"unmapped relation label {label!r}")
        shuffled.append((idx, Triple(t.subject, label, info.role, t.object)))
    state.entries = shuffled
    return {"op": "control:shuffled", "permutation": list(perm)}


def _control_skeleton(state):
    """Mask object entities with role-typed placeholders.

    Placeholders are assigned per distinct (role, object) pair in triple
    order; a non-problem subject that was itself placeheld as an object
    renders as its placeholder so no concrete entity survives.
    """
    counters: dict[RelationRole, int] = {}
    assigned: dict[tuple[RelationRole, str], str] = {}
    entity_alias: dict[str, str] = {}
    for _, t in state.entries:
        key = (t.role, t.object)
        if key not in assigned:
            counters[t.role] = counters.get(t.role, 0) + 1
            ph = f"<{t.role.value.upper()}_{counters[t.role]}>"
            assigned[key] = ph
            entity_alias.setdefault(t.object, ph)
    node = state.source.problem_node
    masked = []
    for idx, t in state.entries:
        subject = t.subject if t.subject == node else entity_alias.get(t.subject, t.subject)
        masked.append((idx, Triple(subject, t.relation, t.role, assigned[(t.role, t.object)])))
    state.entries = masked
    state.masked = True
    return {"op": "control:rel_skeleton"}


def _selector_order(state: _State, ctx: _Context, selector: str, rng) -> list[int]:
    """Positions ordered from most to least preferred by the selector."""
    n = len(state.entries)
    if selector == "semantic":
        return _ranked_positions(state, ctx)
    if selector == "random":
        order = list(range(n))
        rng.shuffle(order)
        return order
    triples = state.triples
    scores = {
        "degree": degree_centrality,
        "betweenness": betweenness_centrality,
        "pagerank": pagerank,
    }[selector](triples).scores
    keyed = [
        (max(scores[t.subject], scores[t.object]), pos)
        for pos, t in enumerate(triples)
    ]
    return [pos for _, pos in sorted(keyed, key=lambda sp: (-sp[0], sp[1]))]


def _step_topk(state, params, ctx, rng, recorded):
    k, selector = params["k"], params["selector"]
    n = len(state.entries)
    if recorded is not None:
        kept = recorded["kept"]
    elif k >= n:
        kept = list(range(n))
    else:
        kept = sorted(_selector_order(state, ctx, selector, rng)[:k])
    _keep_positions(state, kept)
    note = "k >= graph size; full graph returned" if k >= n else None
    rec = {"op": "topk", "selector": selector, "k": k, "kept": list(kept)}
    if note:
        rec["note"] = note
    return rec


def _step_rmtopk(state, params, ctx, rng, recorded):
    k, selector = params["k"], params["selector"]
    n = len(state.entries)
    if recorded is not None:
        removed = recorded["removed"]
    else:
        removed = sorted(_selector_order(state, ctx, selector, rng)[: min(k, n)])
    keep = [p for p in range(n) if p not in set(removed)]
    _keep_positions(state, keep)
    return {"op": "rmtopk", "selector": selector, "k": k, "removed": list(removed)}


def _step_holdout(state, params, ctx, rng, recorded):
    kept = [
        pos for pos, (_, t) in enumerate(state.entries) if t.role is not RelationRole.OUTCOME
    ]
    removed = [p for p in range(len(state.entries)) if p not in set(kept)]
    _keep_positions(state, kept)
    return {"op": "holdout", "removed": removed}


def _step_knockout(state, params, ctx, rng, recorded):
    kind = params["kind"]
    n = len(state.entries)
    if kind == "role":
        role: RelationRole = params["role"]
        removed = [pos for pos, (_, t) in enumerate(state.entries) if t.role is role]
        if not removed:
            raise ConditionError(f"role {role.value!r} absent from graph")
    else:
        count = params["count"]
        if count >= n:
            raise ConditionError(f"knockout count {count} must be < triple count {n}")
        if recorded is not None:
            removed = recorded["removed"]
        elif kind == "random":
            removed = sorted(rng.sample(range(n), count))
        else:
            eb = edge_betweenness(state.triples)
            keyed = [
                (eb[(t.subject, t.object)], pos) for pos, t in enumerate(state.triples)
            ]
            if kind == "bridge":  # highest edge-betweenness first
                order = sorted(keyed, key=lambda sp: (-sp[0], sp[1]))
            else:  # peripheral: lowest first
                order = sorted(keyed, key=lambda sp: (sp[0], sp[1]))
            removed = sorted(pos for _, pos in order[:count])
    keep = [p for p in range(n) if p not in set(removed)]
    _keep_positions(state, keep)
    rec = {"op": "knockout", "kind": kind, "removed": list(removed)}
    if kind == "role":
        rec["role"] = params["role"].value
    else:
        rec["count"] = params["count"]
    return rec


# ---------------------------------------------------------------------------
# Spec-shaped single-operation wrappers


def density_variant(
    graph: LocalGraph, level: str, problem_statement: str, **kw
) -> KgVariant:
    return apply_condition(
        graph, f"density:{level}", problem_statement=problem_statement, **kw
    )


def ontology_variant(graph: LocalGraph, tier: str, schema: GraphSchema) -> KgVariant:
    return apply_condition(
        graph, f"ontology:{tier.lower()}", problem_statement="-", schema=schema
    )


def topology_variant(graph: LocalGraph, mode: str) -> KgVariant:
    return apply_condition(graph, f"topology:{mode}", problem_statement="-")


def random_control(
    graph: LocalGraph,
    corpus: Sequence[LocalGraph],
    match_count: int,
    seed: int,
) -> KgVariant:
    """Variant whose triples are a match_count-sized sample from another problem."""
    atoms = parse_condition("control:random")
    ctx = _Context(problem_statement="-", corpus=corpus, seed=seed, match_count=match_count)
    state = _State(source=graph, entries=list(enumerate(graph.triples)))
    step = _apply_atom(state, atoms[0], ctx, random.Random(seed), recorded=None)
    return _finalize(graph, "control:random", state, [step], seed)


def shuffled_control(graph: LocalGraph, seed: int, schema: GraphSchema) -> KgVariant:
    return apply_condition(
        graph, "control:shuffled", problem_statement="-", schema=schema, seed=seed
    )


def entity_only_control(graph: LocalGraph) -> KgVariant:
    return apply_condition(graph, "control:entity_only", problem_statement="-")


def relation_skeleton_control(graph: LocalGraph) -> KgVariant:
    return apply_condition(graph, "control:rel_skeleton", problem_statement="-")


def top_k_variant(
    graph: LocalGraph,
    k: int,
    selector: str,
    seed: int = 0,
    problem_statement: str = "-",
    **kw,
) -> KgVariant:
    return apply_condition(
        graph, f"topk:{selector}:{k}", problem_statement=problem_statement, seed=seed, **kw
    )


def outcome_holdout(source: LocalGraph | KgVariant) -> KgVariant:
    """Remove every outcome-role triple from a graph or an existing variant."""
    if isinstance(source, LocalGraph):
        return apply_condition(source, "holdout:outcome", problem_statement="-")
    if source.entity_only:
        raise ConditionError("holdout requires role annotations")
    kept = tuple(t for t in source.triples if t.role is not RelationRole.OUTCOME)
    removed = [i for i, t in enumerate(source.triples) if t.role is RelationRole.OUTCOME]
    steps = list(source.provenance.get("steps", [])) + [{"op": "holdout", "removed": removed}]
    return KgVariant(
        problem_id=source.problem_id,
        condition=source.condition + "+holdout:outcome",
        triples=kept,
        expanded=source.expanded,
        masked=source.masked,
        provenance={
            "condition": source.condition + "+holdout:outcome",
            "seed": source.provenance.get("seed", 0),
            "steps": steps,
        },
    )


def knockout(
    graph: LocalGraph, removal: str, count: int = 0, seed: int = 0
) -> KgVariant:
    """Remove bridge/peripheral/random triples, or all triples of a role.

    ``removal`` is one of ``bridge``, ``peripheral``, ``random``, or
    ``role:<role>`` (count is ignored for role removals).
    """
    kind = removal.replace("role:", "role.")
    return apply_condition(
        graph, f"knockout:{kind}:{count}", problem_statement="-", seed=seed
    )
