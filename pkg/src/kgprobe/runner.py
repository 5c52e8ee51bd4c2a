"""Experiment orchestration: bounded concurrency over an append-only JSONL sink.

Records are flushed in plan (problem, condition, sample) order no matter when
their generations complete, so a clean run always produces the same bytes and
an interrupted run leaves a plan-order prefix that a resume extends to the
identical final file. Tasks whose key already exists in the sink are skipped.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from kgprobe.backends import BackendSpec, GenerationRecord, generate
from kgprobe.errors import BackendError
from kgprobe.verbalize import Prompt

Key = tuple[str, str, str, int]


@dataclass(frozen=True)
class GenerationTask:
    prompt: Prompt
    backend: BackendSpec
    sample_index: int

    @property
    def key(self) -> Key:
        return (
            self.prompt.problem_id,
            self.prompt.condition,
            self.backend.model_name,
            self.sample_index,
        )


@dataclass
class RunSummary:
    written: int = 0
    skipped: int = 0
    failed: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed


def load_records(path: str | Path) -> list[GenerationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(GenerationRecord.from_dict(json.loads(line)))
    return records


def existing_keys(path: str | Path) -> set[Key]:
    if not Path(path).exists():
        return set()
    return {r.key for r in load_records(path)}


def _attempt(
    task: GenerationTask,
    seed: int,
    retry_attempts: int,
    retry_backoff_s: float,
    transport,
    sleeper: Callable[[float], None],
) -> tuple[GenerationRecord | None, str | None]:
    for attempt in range(1, retry_attempts + 1):
        try:
            rec = generate(
                task.prompt, task.backend, task.sample_index, seed=seed, transport=transport
            )
            return rec, None
        except BackendError as exc:
            if not exc.retryable or attempt == retry_attempts:
                return None, f"{exc} (after {attempt} attempt(s))"
            sleeper(retry_backoff_s * 2 ** (attempt - 1))
    return None, "unreachable"


def run_experiment(
    tasks: Sequence[GenerationTask],
    out_path: str | Path,
    *,
    seed: int = 0,
    max_in_flight: int = 4,
    retry_attempts: int = 3,
    retry_backoff_s: float = 1.0,
    transport=None,
    sleeper: Callable[[float], None] = time.sleep,
) -> RunSummary:
    """Execute a generation plan into a resumable JSONL sink."""
    if not tasks:
        raise ValueError("run_experiment requires a non-empty plan")
    done = existing_keys(out_path)
    summary = RunSummary()
    todo: list[GenerationTask] = []
    seen: set[Key] = set()
    for task in tasks:
        if task.key in seen:
            raise ValueError(f"duplicate task key {task.key}")
        seen.add(task.key)
        if task.key in done:
            summary.skipped += 1
        else:
            todo.append(task)
    if not todo:
        return summary

    results: dict[int, tuple[GenerationRecord | None, str | None]] = {}
    next_write = 0
    with open(out_path, "a", encoding="utf-8", newline="\n") as sink:
        with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
            futures = {
                pool.submit(
                    _attempt, task, seed, retry_attempts, retry_backoff_s, transport, sleeper
                ): idx
                for idx, task in enumerate(todo)
            }
            for fut in as_completed(futures):
                results[futures[fut]] = fut.result()
                while next_write in results:
                    rec, error = results.pop(next_write)
                    if rec is not None:
                        sink.write(json.dumps(rec.to_dict()) + "\n")
                        sink.flush()
                        summary.written += 1
                    else:
                        summary.failed.append(
                            {"key": list(todo[next_write].key), "error": error}
                        )
                    next_write += 1
    return summary


def write_jsonl(rows: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows
