"""Shared construction helpers for the test suite."""

from __future__ import annotations

from kgprobe.backends import BackendSpec, generate
from kgprobe.kg_core import LocalGraph, RelationRole, Triple
from kgprobe.metrics import score_hypothesis
from kgprobe.seeding import derive_seed
from kgprobe.variants import apply_condition
from kgprobe.verbalize import assemble_prompt, verbalize_triples


def make_graph(problem_id: str, rows: list[tuple[str, str, str, str]], tier="T3") -> LocalGraph:
    """Build a LocalGraph from (subject, relation, role, object) rows."""
    triples = tuple(Triple(s, rel, RelationRole(role), o) for s, rel, role, o in rows)
    return LocalGraph(problem_id=problem_id, tier=tier, triples=triples)


def star_graph(problem_id: str = "star", spokes: int = 5) -> LocalGraph:
    rows = [
        (problem_id, "suffers_from", "failure", f"spoke {i}") for i in range(1, spokes + 1)
    ]
    return make_graph(problem_id, rows)


def chain_graph() -> LocalGraph:
    """5-triple fixture with one 3-hop chain off the problem node 'a'."""
    return make_graph(
        "a",
        [
            ("a", "suffers_from", "failure", "b"),
            ("b", "manifests_in", "failure", "c"),
            ("c", "modulates", "mechanism", "d"),  # third hop: d sits at depth 3
            ("a", "aims_to_improve", "property", "e"),
            ("a", "reports_outcome", "outcome", "f"),
        ],
    )


def mock_pipeline(
    problems,
    graph_by_id,
    schema,
    config,
    inventory,
    conditions,
    *,
    backend=None,
    samples=1,
    seed=7,
    n_problems=None,
    embedder=None,
    reference_condition="density:dense",
):
    """In-process variant -> prompt -> generate -> score pipeline for tests."""
    backend = backend or BackendSpec("mock_echo", "mock_echo")
    subset = problems if n_problems is None else problems[:n_problems]
    corpus = [graph_by_id[p.id] for p in subset]
    styles = config.plan.get("style_overrides", {}) or {}
    generations, variants = [], {}
    for problem in subset:
        for tag in conditions:
            variant = apply_condition(
                graph_by_id[problem.id],
                tag,
                problem_statement=problem.problem_statement,
                schema=schema,
                corpus=corpus,
                seed=derive_seed(seed, problem.id, tag),
                stopwords=config.stopwords(),
            )
            variants[(problem.id, tag)] = variant
            ctx = verbalize_triples(
                variant, styles.get(tag, config.plan.get("style", "compact")),
                config.templates,
            )
            prompt = assemble_prompt(problem, ctx, config.templates["prompt"])
            for sample in range(samples):
                generations.append(generate(prompt, backend, sample, seed=seed))
    references = {
        (g.problem_id, g.model_name): g.hypothesis
        for g in generations
        if g.condition == reference_condition and g.sample_index == 0
    }
    scores = [
        score_hypothesis(
            g.hypothesis,
            variants[(g.problem_id, g.condition)],
            graph_by_id[g.problem_id],
            inventory,
            model_name=g.model_name,
            sample_index=g.sample_index,
            reference_hypothesis=references.get((g.problem_id, g.model_name)),
            embedder=embedder,
            stopwords=config.stopwords(),
        )
        for g in generations
    ]
    return generations, scores
