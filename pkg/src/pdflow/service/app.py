"""HTTP service wrapping the core analyzer.

A long-running instance can keep a warm summary cache on disk, so repeated
analyze requests from CI or editor clients only re-check files whose
observable declarations changed.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from pdflow.config import AnalyzerConfig, AnnotationKind, ConfigError, DEFAULT_ANNOTATIONS
from pdflow.frontend.ast import SourceFile
from pdflow.frontend.parser import parse
from pdflow.metrics import compute_metrics
from pdflow.policygen import build_call_graph, extract_policy, fingerprint
from pdflow.render import DIAGNOSTICS_SCHEMA_VERSION
from pdflow.rules import Rule, analyze
from pdflow.sema import build_symbol_table
from pdflow.service.schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    HealthResponse,
    MetricsResponse,
    PolicyResponse,
)
from pdflow.summaries import SummaryCache, analyze_incremental_sources


def _config_from_payload(payload) -> AnalyzerConfig:
    if payload is None:
        return AnalyzerConfig()
    annotations = dict(DEFAULT_ANNOTATIONS)
    for kind_name, names in (payload.annotations or {}).items():
        try:
            kind = AnnotationKind(kind_name)
        except ValueError:
            raise ConfigError(f"unknown annotation kind '{kind_name}'") from None
        annotations[kind] = tuple(names)
    return AnalyzerConfig(
        annotation_names=annotations,
        external_personal_types=tuple(payload.externalPersonalTypes),
    )


def create_app(cache_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="pdflow", description="personal-data flow analysis")
    cache = SummaryCache(cache_dir) if cache_dir else None

    def prepare(request: AnalyzeRequest):
        if not request.files:
            raise HTTPException(status_code=400, detail="no files supplied")
        try:
            config = _config_from_payload(request.config)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        sources = {f.path: SourceFile.from_text(f.path, f.text)
                   for f in request.files}
        return config, sources

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse()

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze_endpoint(request: AnalyzeRequest) -> AnalyzeResponse:
        config, sources = prepare(request)
        if cache is not None:
            result = analyze_incremental_sources(sources, cache, config)
        else:
            units = [parse(s) for s in sources.values()]
            result = analyze(units, [], config)
        violations = result.count(Rule.R2) + result.count(Rule.R3)
        return AnalyzeResponse(
            exitCode=1 if violations else 0,
            version=DIAGNOSTICS_SCHEMA_VERSION,
            diagnostics=[d.to_dict() for d in result.diagnostics],
            filesAnalyzed=result.files_analyzed,
            classesSeen=result.classes_seen,
        )

    @app.post("/metrics", response_model=MetricsResponse)
    def metrics_endpoint(request: AnalyzeRequest) -> MetricsResponse:
        config, sources = prepare(request)
        units = [parse(s) for s in sources.values()]
        result = analyze(units, [], config)
        table = build_symbol_table(units, [], config)
        return MetricsResponse(**compute_metrics(table, result).to_dict())

    @app.post("/policy", response_model=PolicyResponse)
    def policy_endpoint(request: AnalyzeRequest) -> PolicyResponse:
        config, sources = prepare(request)
        units = [parse(s) for s in sources.values()]
        table = build_symbol_table(units, [], config)
        graph = build_call_graph(table, units)
        doc = extract_policy(graph, table, config,
                             generated_from=fingerprint(units))
        return PolicyResponse(**doc.to_dict())

    return app
