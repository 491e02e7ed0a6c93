"""Analyzer configuration: annotation vocabulary, externals, file selection."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping


class AnnotationKind(Enum):
    """Canonical annotation roles; config maps source names onto these."""

    PERSONAL = "A1"        # marks a class as holding personal data
    HANDLER = "A2"         # marks a processing context as a data handler
    DATA_ENDPOINT = "A3"   # permits personal data to leave a handler context
    ENTITY = "ENTITY"      # persistence entity, used for policy data elements
    ENTRY_POINT = "ENDPOINT"  # web entry point, the root of a policy purpose
    OTHER = "OTHER"


DEFAULT_ANNOTATIONS: dict[AnnotationKind, tuple[str, ...]] = {
    AnnotationKind.PERSONAL: ("PersonalData",),
    AnnotationKind.HANDLER: ("PersonalDataHandler",),
    AnnotationKind.DATA_ENDPOINT: ("PersonalDataEndpoint",),
    AnnotationKind.ENTITY: ("Entity",),
    AnnotationKind.ENTRY_POINT: ("Endpoint", "RequestMethod"),
}

DEFAULT_CONFIG_FILENAME = "pdflow.json"
CACHE_DIR_ENV_VAR = "PDFLOW_CACHE_DIR"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class AnalyzerConfig:
    annotation_names: Mapping[AnnotationKind, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_ANNOTATIONS))
    external_personal_types: tuple[str, ...] = ()
    include: tuple[str, ...] = ()
    exclude: tuple[str, ...] = ()
    cache_dir: str | None = None
    output_format: str = "text"

    def __post_init__(self):
        reverse: dict[str, AnnotationKind] = {}
        for kind, names in self.annotation_names.items():
            for name in names:
                if name in reverse and reverse[name] is not kind:
                    raise ConfigError(
                        f"annotation name '{name}' mapped to both "
                        f"{reverse[name].value} and {kind.value}")
                reverse[name] = kind
        object.__setattr__(self, "_kind_by_name", reverse)
        if self.output_format not in ("text", "json"):
            raise ConfigError(f"unknown output format '{self.output_format}'")

    def kind_of(self, annotation_name: str) -> AnnotationKind:
        return self._kind_by_name.get(annotation_name, AnnotationKind.OTHER)

    def kinds_of(self, names: Iterable[str]) -> frozenset[AnnotationKind]:
        return frozenset(self.kind_of(n) for n in names)


def config_from_dict(data: dict) -> AnalyzerConfig:
    """Build a config from parsed JSON; unspecified keys keep their defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"annotations", "externalPersonalTypes", "include", "exclude",
             "cacheDir", "outputFormat"}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")
    annotations = dict(DEFAULT_ANNOTATIONS)
    for kind_name, names in (data.get("annotations") or {}).items():
        try:
            kind = AnnotationKind(kind_name)
        except ValueError:
            raise ConfigError(f"unknown annotation kind '{kind_name}'") from None
        if kind is AnnotationKind.OTHER:
            raise ConfigError("annotation kind 'OTHER' cannot be configured")
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ConfigError(f"annotation kind '{kind_name}' needs a list of names")
        annotations[kind] = tuple(names)
    def str_tuple(key: str) -> tuple[str, ...]:
        value = data.get(key) or []
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"config key '{key}' needs a list of strings")
        return tuple(value)
    cache_dir = data.get("cacheDir")
    if cache_dir is not None and not isinstance(cache_dir, str):
        raise ConfigError("config key 'cacheDir' needs a string")
    return AnalyzerConfig(
        annotation_names=annotations,
        external_personal_types=str_tuple("externalPersonalTypes"),
        include=str_tuple("include"),
        exclude=str_tuple("exclude"),
        cache_dir=cache_dir,
        output_format=data.get("outputFormat", "text"),
    )


def load_config(path: str) -> AnalyzerConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in config {path}: {e}") from e
    return config_from_dict(data)
