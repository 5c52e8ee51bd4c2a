import json

import pytest

from kgprobe.backends import BackendSpec, GenerationRecord, generate
from kgprobe.errors import BackendError
from kgprobe.metrics import rfs, trr
from kgprobe.variants import KgVariant, apply_condition
from kgprobe.verbalize import assemble_prompt, verbalize_triples


@pytest.fixture()
def prompt_for(problems, graph_by_id, schema, config):
    def build(problem_id, tag, corpus=None):
        problem = next(p for p in problems if p.id == problem_id)
        variant = apply_condition(
            graph_by_id[problem_id],
            tag,
            problem_statement=problem.problem_statement,
            schema=schema,
            corpus=corpus,
            seed=1,
        )
        ctx = verbalize_triples(variant, "compact", config.templates)
        return assemble_prompt(problem, ctx, config.templates["prompt"]), variant

    return build


def test_mock_echo_recalls_every_object(prompt_for):
    prompt, variant = prompt_for("p001", "density:dense")
    record = generate(prompt, BackendSpec("mock_echo", "echo"))
    assert trr(record.hypothesis, variant) == 1.0


def test_mock_echo_under_no_kg_scores_zero(prompt_for, inventory):
    prompt, variant = prompt_for("p001", "no_kg")
    record = generate(prompt, BackendSpec("mock_echo", "echo"))
    assert trr(record.hypothesis, variant) == 0.0
    assert rfs(record.hypothesis, variant, inventory) == 0.0
    assert record.length_proxy == 0


def test_mock_ignore_identical_across_conditions(prompt_for, graph_by_id, inventory):
    hypotheses = set()
    for tag in ("no_kg", "density:sparse", "density:dense"):
        prompt, variant = prompt_for("p002", tag)
        record = generate(prompt, BackendSpec("mock_ignore", "ignore"))
        hypotheses.add(record.hypothesis)
        assert trr(record.hypothesis, variant) == 0.0
        assert rfs(record.hypothesis, variant, inventory) == 0.0
    assert len(hypotheses) == 1


def test_mock_template_expresses_available_roles(prompt_for, inventory):
    prompt, variant = prompt_for("p001", "density:dense")
    record = generate(prompt, BackendSpec("mock_template", "tmpl"))
    assert "via" in record.hypothesis
    assert rfs(record.hypothesis, variant, inventory) > 0.5


def test_mock_template_without_context(prompt_for):
    prompt, _ = prompt_for("p001", "no_kg")
    record = generate(prompt, BackendSpec("mock_template", "tmpl"))
    assert "generic design iteration" in record.hypothesis


def test_generation_is_seed_deterministic(prompt_for):
    prompt, _ = prompt_for("p003", "density:medium")
    spec = BackendSpec("mock_echo", "echo", temperature=0.7)
    a = generate(prompt, spec, sample_index=2, seed=9)
    b = generate(prompt, spec, sample_index=2, seed=9)
    assert a == b
    c = generate(prompt, spec, sample_index=3, seed=9)
    assert a.hypothesis != c.hypothesis or a.sample_index != c.sample_index


def test_temperature_drives_sampling_variation(prompt_for):
    prompt, _ = prompt_for("p001", "density:dense")
    spec = BackendSpec("mock_echo", "echo", temperature=1.0)
    outputs = {generate(prompt, spec, sample_index=i, seed=1).hypothesis for i in range(6)}
    assert len(outputs) > 1  # samples differ at nonzero temperature
    cold = BackendSpec("mock_echo", "echo", temperature=0.0)
    cold_outputs = {
        generate(prompt, cold, sample_index=i, seed=1).hypothesis for i in range(4)
    }
    assert len(cold_outputs) == 1


def test_generation_record_round_trips(prompt_for):
    prompt, _ = prompt_for("p001", "density:sparse")
    record = generate(prompt, BackendSpec("mock_echo", "echo"))
    clone = GenerationRecord.from_dict(json.loads(json.dumps(record.to_dict())))
    assert clone == record
    assert clone.key == (record.problem_id, record.condition, "echo", 0)


def test_backend_spec_validation():
    with pytest.raises(BackendError):
        BackendSpec("http", "model")  # endpoint required
    with pytest.raises(BackendError):
        BackendSpec("mock_wat", "model")


def test_http_backend_happy_path(prompt_for, monkeypatch):
    monkeypatch.setenv("KGPROBE_API_KEY", "secret")
    seen = {}

    def transport(endpoint, payload, headers):
        seen.update(endpoint=endpoint, payload=payload, headers=headers)
        return {"choices": [{"text": "a hypothesis"}]}

    prompt, _ = prompt_for("p001", "density:sparse")
    spec = BackendSpec("http", "real-model", endpoint="http://llm.local/v1")
    record = generate(prompt, spec, transport=transport)
    assert record.hypothesis == "a hypothesis"
    assert seen["payload"]["model"] == "real-model"
    assert seen["payload"]["prompt"] == prompt.full_text
    assert seen["headers"]["Authorization"] == "Bearer secret"


def test_http_backend_requires_credential(prompt_for, monkeypatch):
    monkeypatch.delenv("KGPROBE_API_KEY", raising=False)
    prompt, _ = prompt_for("p001", "density:sparse")
    spec = BackendSpec("http", "m", endpoint="http://llm.local")
    with pytest.raises(BackendError, match="KGPROBE_API_KEY"):
        generate(prompt, spec, transport=lambda *a: {})


def test_http_backend_malformed_response_carries_body(prompt_for, monkeypatch):
    monkeypatch.setenv("KGPROBE_API_KEY", "secret")
    prompt, _ = prompt_for("p001", "density:sparse")
    spec = BackendSpec("http", "m", endpoint="http://llm.local")
    with pytest.raises(BackendError) as err:
        generate(prompt, spec, transport=lambda *a: {"unexpected": True})
    assert not err.value.retryable
    assert "unexpected" in (err.value.raw or "")


def test_http_backend_transport_error_is_retryable(prompt_for, monkeypatch):
    monkeypatch.setenv("KGPROBE_API_KEY", "secret")
    prompt, _ = prompt_for("p001", "density:sparse")
    spec = BackendSpec("http", "m", endpoint="http://llm.local")

    def transport(*args):
        raise OSError("boom")

    with pytest.raises(BackendError) as err:
        generate(prompt, spec, transport=transport)
    assert err.value.retryable


def test_skeleton_echo_still_scores_zero_recall(prompt_for, inventory):
    prompt, variant = prompt_for("p001", "control:rel_skeleton")
    record = generate(prompt, BackendSpec("mock_echo", "echo"))
    assert "<MECHANISM_1>" in record.hypothesis  # echoed placeholder
    assert trr(record.hypothesis, variant) == 0.0  # masked convention holds


def test_entity_only_echo_uses_bare_objects(prompt_for):
    prompt, variant = prompt_for("p001", "control:entity_only")
    record = generate(prompt, BackendSpec("mock_echo", "echo"))
    assert isinstance(variant, KgVariant) and variant.entity_only
    assert trr(record.hypothesis, variant) == 1.0
