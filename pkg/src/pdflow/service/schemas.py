"""Pydantic request/response models for the analysis service."""
from __future__ import annotations

from pydantic import BaseModel, Field

from pdflow import __version__


class FilePayload(BaseModel):
    path: str
    text: str


class ConfigPayload(BaseModel):
    """Subset of the analyzer configuration that makes sense per request.

    Keys of `annotations` are canonical kinds (A1, A2, A3, ENTITY, ENDPOINT);
    values replace the default accepted names for that kind.
    """

    annotations: dict[str, list[str]] | None = None
    externalPersonalTypes: list[str] = Field(default_factory=list)


class AnalyzeRequest(BaseModel):
    files: list[FilePayload]
    config: ConfigPayload | None = None


class ContextOwner(BaseModel):
    class_name: str = Field(alias="class")
    method: str | None = None

    model_config = {"populate_by_name": True}


class CalleeRef(BaseModel):
    class_name: str | None = Field(None, alias="class")
    method: str

    model_config = {"populate_by_name": True}


class DiagnosticModel(BaseModel):
    rule: str
    file: str
    line: int
    column: int
    message: str
    subjectType: str
    contextOwner: ContextOwner
    callee: CalleeRef | None = None


class AnalyzeResponse(BaseModel):
    exitCode: int
    version: int
    diagnostics: list[DiagnosticModel]
    filesAnalyzed: int
    classesSeen: int


class MetricsResponse(BaseModel):
    totalClasses: int
    personalClasses: int
    personalRatio: float
    handlerContexts: int
    endpointFunctions: int
    perModulePersonal: dict[str, int]
    violationCounts: dict[str, int]


class DataElementModel(BaseModel):
    class_name: str = Field(alias="class")
    fields: list[dict[str, str]]

    model_config = {"populate_by_name": True}


class PurposeEntry(BaseModel):
    class_name: str = Field(alias="class")
    method: str

    model_config = {"populate_by_name": True}


class PurposeModel(BaseModel):
    name: str
    entry: PurposeEntry
    data: list[DataElementModel]
    unresolvedCalls: int


class PolicyResponse(BaseModel):
    version: int
    generatedFrom: str
    purposes: list[PurposeModel]
    warnings: list[str]


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = __version__
