import json

import pytest

from kgprobe.backends import BackendSpec
from kgprobe.errors import BackendError
from kgprobe.runner import GenerationTask, existing_keys, load_records, run_experiment
from kgprobe.variants import apply_condition
from kgprobe.verbalize import assemble_prompt, verbalize_triples


@pytest.fixture()
def tasks(problems, graph_by_id, schema, config):
    backend = BackendSpec("mock_echo", "echo")
    out = []
    for problem in problems[:6]:
        for tag in ("no_kg", "density:sparse", "density:medium"):
            variant = apply_condition(
                graph_by_id[problem.id],
                tag,
                problem_statement=problem.problem_statement,
                schema=schema,
                seed=3,
            )
            ctx = verbalize_triples(variant, "compact", config.templates)
            prompt = assemble_prompt(problem, ctx, config.templates["prompt"])
            for sample in range(2):
                out.append(GenerationTask(prompt, backend, sample))
    return out


def test_records_written_in_plan_order(tasks, tmp_path):
    out = tmp_path / "gen.jsonl"
    summary = run_experiment(tasks, out, seed=5, max_in_flight=8)
    assert summary.written == len(tasks)
    assert summary.ok
    records = load_records(out)
    assert [r.key for r in records] == [t.key for t in tasks]


def test_rerun_of_complete_plan_writes_nothing(tasks, tmp_path):
    out = tmp_path / "gen.jsonl"
    run_experiment(tasks, out, seed=5)
    before = out.read_bytes()
    summary = run_experiment(tasks, out, seed=5)
    assert summary.written == 0
    assert summary.skipped == len(tasks)
    assert out.read_bytes() == before


def test_interrupted_run_resumes_to_identical_file(tasks, tmp_path):
    one_shot = tmp_path / "full.jsonl"
    run_experiment(tasks, one_shot, seed=5, max_in_flight=7)

    resumed = tmp_path / "resumed.jsonl"
    run_experiment(tasks[:10], resumed, seed=5, max_in_flight=3)  # "killed" mid-plan
    summary = run_experiment(tasks, resumed, seed=5, max_in_flight=5)
    assert summary.skipped == 10
    assert resumed.read_bytes() == one_shot.read_bytes()


def test_duplicate_task_keys_rejected(tasks, tmp_path):
    with pytest.raises(ValueError, match="duplicate"):
        run_experiment([tasks[0], tasks[0]], tmp_path / "gen.jsonl")


def test_empty_plan_rejected(tmp_path):
    with pytest.raises(ValueError):
        run_experiment([], tmp_path / "gen.jsonl")


def _http_tasks(problems, graph_by_id, schema, config, n=3):
    backend = BackendSpec("http", "m", endpoint="http://llm.local")
    out = []
    for problem in problems[:n]:
        variant = apply_condition(
            graph_by_id[problem.id],
            "density:sparse",
            problem_statement=problem.problem_statement,
            schema=schema,
        )
        ctx = verbalize_triples(variant, "compact", config.templates)
        out.append(
            GenerationTask(
                assemble_prompt(problem, ctx, config.templates["prompt"]), backend, 0
            )
        )
    return out


def test_retry_then_success(problems, graph_by_id, schema, config, tmp_path, monkeypatch):
    monkeypatch.setenv("KGPROBE_API_KEY", "k")
    attempts = {"n": 0}

    def flaky(endpoint, payload, headers):
        attempts["n"] += 1
        if attempts["n"] < 3:
            raise OSError("transient")
        return {"choices": [{"text": "ok"}]}

    naps = []
    tasks = _http_tasks(problems, graph_by_id, schema, config, n=1)
    summary = run_experiment(
        tasks,
        tmp_path / "gen.jsonl",
        transport=flaky,
        max_in_flight=1,
        retry_backoff_s=1.0,
        sleeper=naps.append,
    )
    assert summary.ok and summary.written == 1
    assert attempts["n"] == 3
    assert naps == [1.0, 2.0]  # exponential backoff


def test_permanent_failure_reported(problems, graph_by_id, schema, config, tmp_path, monkeypatch):
    monkeypatch.setenv("KGPROBE_API_KEY", "k")

    def broken(endpoint, payload, headers):
        raise OSError("down")

    tasks = _http_tasks(problems, graph_by_id, schema, config, n=2)
    summary = run_experiment(
        tasks, tmp_path / "gen.jsonl", transport=broken, sleeper=lambda s: None
    )
    assert not summary.ok
    assert len(summary.failed) == 2
    assert all("attempt" in f["error"] for f in summary.failed)


def test_jsonl_round_trip_is_exact(tasks, tmp_path):
    out = tmp_path / "gen.jsonl"
    run_experiment(tasks[:5], out, seed=5)
    records = load_records(out)
    rewritten = "".join(json.dumps(r.to_dict()) + "\n" for r in records)
    assert rewritten.encode() == out.read_bytes()
    assert existing_keys(out) == {r.key for r in records}
