"""Turn KG variants into prompt context blocks and assemble full prompts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from kgprobe.errors import SchemaValidationError
from kgprobe.kg_core import ProblemRecord
from kgprobe.variants import KgVariant

DEFAULT_CONTEXT_HEADER = "Relevant knowledge-graph facts:"
DEFAULT_ENTITY_HEADER = "Relevant entities:"

# Fallback expanded sentences when no template config is supplied; the
# shipped config carries the canonical set.
_FALLBACK_EXPANDED = "In this problem, {subject} {relation} {object}."


@dataclass(frozen=True)
class PromptContext:
    """Verbalized context block for one condition.

    ``objects`` and ``role_objects`` expose the supplied object strings (and
    their roles, when the variant carries roles) so mock backends can react
    to context without re-parsing prompt text.
    """

    condition: str
    text: str
    length_proxy: int
    objects: tuple[str, ...]
    role_objects: tuple[tuple[str, str], ...]
    style: str

    def __post_init__(self):
        assert self.length_proxy == len(self.text)


@dataclass(frozen=True)
class Prompt:
    problem_id: str
    condition: str
    full_text: str
    problem_statement: str
    context: PromptContext


def verbalize_triples(
    variant: KgVariant,
    style: str = "compact",
    templates: dict[str, Any] | None = None,
) -> PromptContext:
    """Render a variant's triples as deterministic prompt text.

    ``style`` is ``compact`` (one ``subject —relation→ object`` line per
    triple) or ``expanded`` (one role-specific sentence per triple). A
    variant carrying the expanded flag always renders expanded. Entity-only
    variants render a comma-separated object list regardless of style.
    """
    if style not in ("compact", "expanded"):
        raise ValueError(f"unknown verbalization style {style!r}")
    templates = templates or {}
    header = templates.get("context_header", DEFAULT_CONTEXT_HEADER)
    if variant.expanded:
        style = "expanded"

    if variant.entity_only:
        objects = tuple(variant.objects or ())
        if objects:
            head = templates.get("entity_header", DEFAULT_ENTITY_HEADER)
            text = head + " " + ", ".join(objects)
        else:
            text = ""
        return PromptContext(variant.condition, text, len(text), objects, (), "entity_only")

    if not variant.triples:
        return PromptContext(variant.condition, "", 0, (), (), style)

    lines = []
    for t in variant.triples:
        if style == "compact":
            lines.append(f"{t.subject} —{t.relation}→ {t.object}")
        else:
            tpl = templates.get("expanded", {}).get(t.role.value, _FALLBACK_EXPANDED)
            lines.append(
                tpl.format(
                    subject=t.subject,
                    relation=t.relation.replace("_", " "),
                    object=t.object,
                )
            )
    text = header + "\n" + "\n".join(lines)
    objects = tuple(t.object for t in variant.triples)
    role_objects = tuple((t.role.value, t.object) for t in variant.triples)
    return PromptContext(variant.condition, text, len(text), objects, role_objects, style)


def context_length_proxy(ctx: PromptContext) -> int:
    """Character count of the context block."""
    return ctx.length_proxy


def assemble_prompt(problem: ProblemRecord, ctx: PromptContext, template: str) -> Prompt:
    """Substitute the ``{problem}`` and ``{context}`` slots of a template.

    Pure slot substitution; the assembled text must contain the problem
    statement verbatim exactly once.
    """
    for slot in ("{problem}", "{context}"):
        if slot not in template:
            raise SchemaValidationError(f"prompt template is missing the {slot} slot")
    full_text = template.replace("{problem}", problem.problem_statement).replace(
        "{context}", ctx.text
    )
    occurrences = full_text.count(problem.problem_statement)
    if occurrences != 1:
        raise SchemaValidationError(
            f"problem statement must appear exactly once in the prompt "
            f"(found {occurrences})"
        )
    return Prompt(
        problem_id=problem.id,
        condition=ctx.condition,
        full_text=full_text,
        problem_statement=problem.problem_statement,
        context=ctx,
    )
