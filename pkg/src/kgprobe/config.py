"""Configuration loading: packaged defaults deep-merged with a user file."""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from kgprobe.errors import SchemaValidationError
from kgprobe.kg_core import GraphSchema, RelationRole
from kgprobe.text import DEFAULT_STOPWORDS


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def default_config_dict() -> dict[str, Any]:
    text = resources.files("kgprobe.data").joinpath("default_config.yaml").read_text(
        encoding="utf-8"
    )
    return yaml.safe_load(text)


class Config:
    """Typed views over the merged configuration tree."""

    def __init__(self, tree: dict[str, Any]):
        self.tree = tree
        self._validate()

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Config":
        tree = default_config_dict()
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                user = yaml.safe_load(fh) or {}
            if not isinstance(user, dict):
                raise SchemaValidationError(f"config file {path} must be a mapping")
            tree = _deep_merge(tree, user)
        return cls(tree)

    def _validate(self) -> None:
        cues = self.tree.get("role_cues", {})
        for role, words in cues.items():
            RelationRole(role)  # raises on unknown role names
            if not words:
                raise SchemaValidationError(
                    f"role_cues for {role!r} must be non-empty", field=role
                )
        # Fail early on a malformed schema section.
        self.schema()

    def schema(self) -> GraphSchema:
        return GraphSchema.from_config(self.tree["schema"])

    def stopwords(self) -> frozenset[str]:
        custom = self.tree.get("stopwords")
        if custom:
            return frozenset(w.lower() for w in custom)
        return DEFAULT_STOPWORDS

    def role_cues(self) -> dict[RelationRole, tuple[str, ...]]:
        return {
            RelationRole(role): tuple(words)
            for role, words in self.tree["role_cues"].items()
        }

    @property
    def templates(self) -> dict[str, Any]:
        return self.tree["templates"]

    @property
    def variants(self) -> dict[str, Any]:
        return self.tree["variants"]

    @property
    def plan(self) -> dict[str, Any]:
        return self.tree["plan"]

    @property
    def scoring(self) -> dict[str, Any]:
        return self.tree["scoring"]

    @property
    def analysis(self) -> dict[str, Any]:
        return self.tree["analysis"]

    @property
    def generation(self) -> dict[str, Any]:
        return self.tree["generation"]
