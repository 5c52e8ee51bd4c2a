"""Pluggable text-generation backends: HTTP plus three deterministic mocks.

Mocks exist so the entire pipeline runs offline with controllable behaviour:

* ``mock_echo``   - restates the object entities supplied in the context, so
  provided-graph recall is 1.0 under a full KG and tracks the context under
  subsets. Temperature > 0 drops objects at random per sample.
* ``mock_ignore`` - emits a context-blind boilerplate plan (worded to avoid
  all cue vocabulary), identical across conditions of a problem.
* ``mock_template`` - fills a role-aware hypothesis template from the
  context triples, producing cue language for roles that are present.
"""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass
from typing import Any

from kgprobe.embedding import walk_json_path
from kgprobe.errors import BackendError
from kgprobe.seeding import derive_seed
from kgprobe.verbalize import Prompt

BACKEND_KINDS = ("http", "mock_echo", "mock_ignore", "mock_template")
API_KEY_ENV = "KGPROBE_API_KEY"


@dataclass(frozen=True)
class BackendSpec:
    """How to reach one generation backend."""

    kind: str
    model_name: str
    endpoint: str | None = None
    temperature: float = 0.0
    max_tokens: int = 256
    samples: int = 1
    text_path: str = "choices.0.text"

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise BackendError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise BackendError("http backend requires an endpoint")


@dataclass(frozen=True)
class GenerationRecord:
    """One generated hypothesis; (problem, condition, model, sample) is unique."""

    problem_id: str
    condition: str
    model_name: str
    sample_index: int
    prompt_hash: str
    hypothesis: str
    length_proxy: int
    seed: int

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.problem_id, self.condition, self.model_name, self.sample_index)

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem_id": self.problem_id,
            "condition": self.condition,
            "model_name": self.model_name,
            "sample_index": self.sample_index,
            "prompt_hash": self.prompt_hash,
            "hypothesis": self.hypothesis,
            "length_proxy": self.length_proxy,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GenerationRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def generate(
    prompt: Prompt,
    backend: BackendSpec,
    sample_index: int = 0,
    seed: int = 0,
    transport=None,
) -> GenerationRecord:
    """Run one generation; mock randomness is fully derived from the seed."""
    record_seed = derive_seed(
        seed, prompt.problem_id, prompt.condition, backend.model_name, sample_index
    )
    rng = random.Random(record_seed)
    if backend.kind == "mock_echo":
        hypothesis = _mock_echo(prompt, backend, rng, sample_index)
    elif backend.kind == "mock_ignore":
        hypothesis = _mock_ignore(prompt)
    elif backend.kind == "mock_template":
        hypothesis = _mock_template(prompt, backend, rng, sample_index)
    else:
        hypothesis = _http_generate(prompt, backend, transport)
    return GenerationRecord(
        problem_id=prompt.problem_id,
        condition=prompt.condition,
        model_name=backend.model_name,
        sample_index=sample_index,
        prompt_hash=prompt_hash(prompt.full_text),
        hypothesis=hypothesis,
        length_proxy=prompt.context.length_proxy,
        seed=record_seed,
    )


def _drop_probability(temperature: float) -> float:
    return min(0.5, 0.3 * temperature)


def _mock_echo(prompt: Prompt, backend: BackendSpec, rng, sample_index: int) -> str:
    objects = sorted(set(prompt.context.objects))
    if backend.temperature > 0 and sample_index > 0:
        p = _drop_probability(backend.temperature)
        objects = [o for o in objects if rng.random() >= p]
    if not objects:
        return "No graph facts were provided for this problem."
    return "Observed graph facts point to " + ", ".join(objects) + "."


def _mock_ignore(prompt: Prompt) -> str:
    # Deliberately graph-blind and free of cue/object vocabulary so that
    # provided-graph metrics stay at zero under every condition.
    return (
        f"A staged review of problem {prompt.problem_id} is planned, with a "
        "methodical parameter sweep and a preregistered comparison against "
        "baseline procedures."
    )


def _mock_template(prompt: Prompt, backend: BackendSpec, rng, sample_index: int) -> str:
    first_by_role: dict[str, str] = {}
    for role, obj in prompt.context.role_objects:
        first_by_role.setdefault(role, obj)
    if not first_by_role:
        return (
            "No structured relations were supplied, so only a generic design "
            "iteration is proposed."
        )
    drop = 0.0
    if backend.temperature > 0 and sample_index > 0:
        drop = _drop_probability(backend.temperature)

    def take(role: str) -> str | None:
        obj = first_by_role.get(role)
        if obj is None or (drop and rng.random() < drop):
            return None
        return obj

    parts = ["We hypothesize that"]
    intervention = take("intervention")
    parts.append(
        f"applying {intervention} as a targeted treatment"
        if intervention
        else "a targeted treatment"
    )
    failure = take("failure")
    if failure:
        parts.append(f"counteracts {failure}")
    mechanism = take("mechanism")
    if mechanism:
        parts.append(f"via {mechanism}")
    prop = take("property")
    if prop:
        parts.append(f"improving {prop}")
    outcome = take("outcome")
    if outcome:
        parts.append(f"to achieve {outcome}")
    component = take("component")
    if component:
        parts.append(f"in the {component}")
    return " ".join(parts) + "."


def _http_generate(prompt: Prompt, backend: BackendSpec, transport) -> str:
    api_key = os.environ.get(API_KEY_ENV)
    if not api_key:
        raise BackendError(f"http backend requires the {API_KEY_ENV} environment variable")
    payload = {
        "model": backend.model_name,
        "prompt": prompt.full_text,
        "temperature": backend.temperature,
        "max_tokens": backend.max_tokens,
    }
    headers = {"Authorization": f"Bearer {api_key}"}
    send = transport or _default_transport
    try:
        body = send(backend.endpoint, payload, headers)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"generation request failed: {exc}", retryable=True) from exc
    try:
        text = walk_json_path(body, backend.text_path)
    except BackendError as exc:
        raise BackendError(
            f"malformed completion response: {exc}", raw=repr(body)
        ) from exc
    if not isinstance(text, str):
        raise BackendError(
            f"completion text at {backend.text_path!r} is not a string", raw=repr(body)
        )
    return text


def _default_transport(endpoint: str, payload: dict, headers: dict) -> dict:
    import requests

    resp = requests.post(endpoint, json=payload, headers=headers, timeout=60)
    resp.raise_for_status()
    return resp.json()
