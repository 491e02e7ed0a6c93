"""Command-line driver: file discovery, config resolution, and rendering.

The CLI is a thin client over the core analysis functions; the same core
backs the HTTP service. Exit codes: 0 clean, 1 when analyze found at least
one R2/R3 violation, 2 on usage, config, or I/O errors.
"""
from __future__ import annotations

import argparse
import fnmatch
import os
import sys
from pathlib import Path

from pdflow.config import (
    CACHE_DIR_ENV_VAR,
    DEFAULT_CONFIG_FILENAME,
    AnalyzerConfig,
    ConfigError,
    load_config,
)
from pdflow.frontend.ast import SourceFile
from pdflow.frontend.parser import parse
from pdflow.metrics import compute_metrics
from pdflow.policygen import build_call_graph, extract_policy, fingerprint
from pdflow.render import render_diagnostics, render_metrics, render_policy
from pdflow.rules import Rule, analyze
from pdflow.sema import build_symbol_table
from pdflow.summaries import SummaryCache, analyze_incremental
from pdflow import __version__

SOURCE_EXTENSION = ".al"


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdflow",
        description="Annotation-based personal-data flow analyzer for AL sources.")
    parser.add_argument("--version", action="version", version=f"pdflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("paths", nargs="+", help="source files or directories")
        p.add_argument("--config", metavar="P", help="config file (JSON)")
        p.add_argument("--format", choices=("text", "json"), dest="fmt")
        p.add_argument("--cache-dir", metavar="P")
        p.add_argument("--no-cache", action="store_true")
        p.add_argument("--out", metavar="P", help="write output to a file")

    add_common(sub.add_parser("analyze", help="report R2/R3 violations"))
    add_common(sub.add_parser("metrics", help="personal-data prevalence metrics"))
    add_common(sub.add_parser("policy", help="extract a policy template"))

    serve = sub.add_parser("serve", help="run the HTTP analysis service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--cache-dir", metavar="P")
    return parser


def resolve_config(args) -> AnalyzerConfig:
    if args.config is not None:
        return load_config(args.config)
    if os.path.exists(DEFAULT_CONFIG_FILENAME):
        return load_config(DEFAULT_CONFIG_FILENAME)
    return AnalyzerConfig()


def discover_files(paths, config: AnalyzerConfig) -> list[str]:
    found: list[str] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found.extend(str(f) for f in sorted(p.rglob(f"*{SOURCE_EXTENSION}")))
        elif p.is_file():
            found.append(str(p))
        else:
            raise ConfigError(f"no such file or directory: {raw}")
    if config.include:
        found = [f for f in found
                 if any(fnmatch.fnmatch(Path(f).as_posix(), g)
                        for g in config.include)]
    for glob in config.exclude:
        found = [f for f in found
                 if not fnmatch.fnmatch(Path(f).as_posix(), glob)]
    unique = sorted(dict.fromkeys(found))
    if not unique:
        raise ConfigError("no input files")
    return unique


def resolve_cache_dir(args, config: AnalyzerConfig) -> str | None:
    if args.no_cache:
        return None
    if args.cache_dir:
        return args.cache_dir
    if config.cache_dir:
        return config.cache_dir
    return os.environ.get(CACHE_DIR_ENV_VAR) or None


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        if text:
            print(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + ("\n" if text else ""))


def _load_units(files):
    return [parse(SourceFile.load(f)) for f in files]


def run(argv) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    try:
        if args.command == "serve":
            return _cmd_serve(args)
        config = resolve_config(args)
        fmt = args.fmt or config.output_format
        files = discover_files(args.paths, config)
        if args.command == "analyze":
            return _cmd_analyze(args, config, fmt, files)
        if args.command == "metrics":
            return _cmd_metrics(args, config, fmt, files)
        return _cmd_policy(args, config, fmt, files)
    except ConfigError as e:
        print(f"pdflow: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"pdflow: error: {e}", file=sys.stderr)
        return 2


def _cmd_analyze(args, config, fmt, files) -> int:
    cache_dir = resolve_cache_dir(args, config)
    if cache_dir is not None:
        cache = SummaryCache(cache_dir)
        result = analyze_incremental(set(), files, cache, config)
    else:
        units = _load_units(files)
        result = analyze(units, [], config)
    _emit(render_diagnostics(result, fmt), args.out)
    violations = result.count(Rule.R2) + result.count(Rule.R3)
    return 1 if violations else 0


def _cmd_metrics(args, config, fmt, files) -> int:
    units = _load_units(files)
    result = analyze(units, [], config)
    table = build_symbol_table(units, [], config)
    report = compute_metrics(table, result)
    _emit(render_metrics(report, fmt), args.out)
    return 0


def _cmd_policy(args, config, fmt, files) -> int:
    units = _load_units(files)
    table = build_symbol_table(units, [], config)
    graph = build_call_graph(table, units)
    doc = extract_policy(graph, table, config, generated_from=fingerprint(units))
    _emit(render_policy(doc, fmt), args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from pdflow.service.app import create_app

    cache_dir = args.cache_dir or os.environ.get(CACHE_DIR_ENV_VAR) or None
    uvicorn.run(create_app(cache_dir=cache_dir), host=args.host, port=args.port)
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
