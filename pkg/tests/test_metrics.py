import pytest
from hypothesis import given, strategies as st

from kgprobe.errors import SchemaValidationError
from kgprobe.kg_core import LocalGraph
from kgprobe.metrics import (
    RoleInventory,
    fixed_reference,
    ktc,
    mech_int_coverage,
    rfs,
    score_hypothesis,
    trr,
)
from kgprobe.text import normalize_terms
from kgprobe.variants import (
    KgVariant,
    apply_condition,
    entity_only_control,
    relation_skeleton_control,
)

from helpers import make_graph
from oracles import oracle_ktc, oracle_rfs, oracle_trr


def variant_of(graph, condition="full"):
    return KgVariant(problem_id=graph.problem_id, condition=condition, triples=graph.triples)


# -- normalize_terms ----------------------------------------------------------


def test_normalize_terms_examples():
    assert normalize_terms("The SEI-layer grows.") == {"sei", "layer", "grows"}
    assert normalize_terms("") == set()


@given(st.text(alphabet="abcdefg XYZ,.-!?", max_size=60))
def test_normalize_terms_idempotent(text):
    once = normalize_terms(text)
    again = normalize_terms(" ".join(sorted(once)))
    assert again == once


# -- trr ----------------------------------------------------------------------


def test_trr_all_objects_present():
    graph = make_graph("g", [("g", "suffers_from", "failure", "alpha fade"),
                             ("g", "addressed_by", "intervention", "beta layer")])
    assert trr("We see alpha fade and a beta layer here.", variant_of(graph)) == 1.0


def test_trr_two_of_three():
    graph = make_graph("g", [("g", "suffers_from", "failure", "alpha"),
                             ("g", "suffers_from", "failure", "beta"),
                             ("g", "suffers_from", "failure", "gamma")])
    value = trr("alpha and beta appear", variant_of(graph))
    assert value == pytest.approx(2 / 3)


def test_trr_no_kg_is_zero(graph_by_id, problems, schema):
    problem = problems[0]
    variant = apply_condition(
        graph_by_id[problem.id], "no_kg", problem_statement=problem.problem_statement
    )
    assert trr("anything at all", variant) == 0.0


def test_trr_invariant_to_case_punctuation_hyphenation():
    graph = make_graph("g", [("g", "suffers_from", "failure", "SEI-layer growth")])
    assert trr("we observed sei layer growth!", variant_of(graph)) == 1.0
    assert trr("We Observed SEI-LAYER GROWTH", variant_of(graph)) == 1.0


# -- rfs ----------------------------------------------------------------------


def test_rfs_single_mechanism_role_with_via(inventory):
    graph = make_graph("g", [("g", "operates_through", "mechanism", "ion hopping")])
    assert rfs("transport happens via ion hopping", variant_of(graph), inventory) == 1.0


def test_rfs_entity_only_is_zero(graph_by_id, inventory):
    variant = entity_only_control(graph_by_id["p001"])
    assert rfs("any hypothesis mentioning coating via things", variant, inventory) == 0.0


def test_rfs_half_when_one_of_two_roles_cued(inventory):
    graph = make_graph("g", [("g", "operates_through", "mechanism", "x pathway"),
                             ("g", "reports_outcome", "outcome", "y outcome")])
    assert rfs("results improve notably", variant_of(graph), inventory) == 0.5


def test_rfs_empty_inventory_rejected_at_load():
    with pytest.raises(SchemaValidationError):
        RoleInventory.from_config({"mechanism": []})


# -- ktc ----------------------------------------------------------------------


def test_ktc_full_coverage():
    graph = make_graph("g", [("g", "suffers_from", "failure", "alpha fade")])
    assert ktc("alpha fade is seen", variant_of(graph)) == 1.0


def test_ktc_one_third():
    graph = make_graph("g", [("g", "addressed_by", "intervention", "lithium coating"),
                             ("g", "involves_component", "component", "anode")])
    assert ktc("the coating works", variant_of(graph)) == pytest.approx(1 / 3)


def test_ktc_empty_hypothesis_is_zero(graph_by_id):
    assert ktc("", variant_of(graph_by_id["p001"])) == 0.0


# -- conventions --------------------------------------------------------------


def test_relation_skeleton_rfs_free_trr_ktc_zero(graph_by_id, inventory):
    skeleton = relation_skeleton_control(graph_by_id["p001"])
    hypothesis = "Fixed via a coating treatment, and even <MECHANISM_1> is echoed."
    assert trr(hypothesis, skeleton) == 0.0
    assert ktc(hypothesis, skeleton) == 0.0
    assert rfs(hypothesis, skeleton, inventory) > 0.0


# -- fixed reference ----------------------------------------------------------


def test_fixed_reference_equals_provided_for_full_graph(graph_by_id, inventory):
    graph = graph_by_id["p002"]
    hypothesis = "Observed graph facts point to " + ", ".join(
        sorted({t.object for t in graph.triples})
    )
    full = variant_of(graph)
    assert fixed_reference(hypothesis, graph, "trr") == trr(hypothesis, full)
    assert fixed_reference(hypothesis, graph, "ktc") == ktc(hypothesis, full)
    assert fixed_reference(hypothesis, graph, "rfs", inventory) == rfs(
        hypothesis, full, inventory
    )


def test_fixed_reference_quarter_for_nokg_output():
    rows = [("g", "suffers_from", "failure", f"fact{i:02d}") for i in range(16)]
    graph = make_graph("g", rows)
    hypothesis = "We rely on fact00, fact01, fact02 and fact03 only."
    assert fixed_reference(hypothesis, graph, "trr") == 0.25


# -- mechanism/intervention coverage -------------------------------------------


def test_mech_int_coverage_extremes_and_half():
    graph = make_graph("g", [
        ("g", "operates_through", "mechanism", "alpha"),
        ("g", "addressed_by", "intervention", "beta"),
        ("g", "reports_outcome", "outcome", "noise words"),
    ])
    assert mech_int_coverage("alpha and beta both", graph) == 1.0
    assert mech_int_coverage("nothing relevant", graph) == 0.0
    assert mech_int_coverage("only alpha shows", graph) == 0.5


def test_mech_int_coverage_undefined_without_those_roles():
    graph = make_graph("g", [("g", "reports_outcome", "outcome", "whatever")])
    assert mech_int_coverage("whatever", graph) is None


# -- oracle agreement and properties -------------------------------------------


def test_metrics_match_oracles_on_fixture(graph_by_id, inventory, config):
    graph = graph_by_id["p003"]
    variant = variant_of(graph)
    hypothesis = (
        "Capacity fade is mitigated via a protective coating, and the "
        "garnet solid electrolyte stays stable."
    )
    objects = [t.object for t in graph.triples]
    roles = [t.role.value for t in graph.triples]
    cue_map = {role.value: list(words) for role, words in inventory.cues.items()}
    assert trr(hypothesis, variant) == oracle_trr(hypothesis, objects)
    assert ktc(hypothesis, variant) == oracle_ktc(
        hypothesis, objects, config.stopwords()
    )
    assert rfs(hypothesis, variant, inventory) == oracle_rfs(hypothesis, roles, cue_map)


@given(extra=st.text(alphabet="abcdefgh ", max_size=40))
def test_metrics_monotone_under_text_extension(extra, inventory):
    graph = make_graph("g", [
        ("g", "suffers_from", "failure", "alpha decay"),
        ("g", "operates_through", "mechanism", "beta route"),
    ])
    variant = variant_of(graph)
    base = "we start from alpha decay"
    longer = base + " " + extra
    assert trr(longer, variant) >= trr(base, variant)
    assert ktc(longer, variant) >= ktc(base, variant)
    assert rfs(longer, variant, inventory) >= rfs(base, variant, inventory)


def test_score_hypothesis_assembles_record(graph_by_id, inventory):
    graph = graph_by_id["p001"]
    record = score_hypothesis(
        "some text about self-discharge",
        variant_of(graph, condition="density:dense"),
        graph,
        inventory,
        model_name="mock",
    )
    assert record.problem_id == "p001"
    assert 0.0 <= record.trr <= 1.0
    assert record.d_sem_to_full is None
    for value in (record.trr, record.rfs, record.ktc,
                  record.trr_ref, record.rfs_ref, record.ktc_ref):
        assert 0.0 <= value <= 1.0
