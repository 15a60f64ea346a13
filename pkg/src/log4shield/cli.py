"""Command-line entry point: ``log4shield scan | kb | eval``.

Exit codes: 0 clean (or below threshold), 1 findings at/above threshold,
2 usage or scan error. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .deepscan import ScanFilter
from .evaluation import ManifestError, load_manifest, render_eval, run_corpus
from .kb import KbError, KnowledgeBase, default_kb, load_kb
from .pipeline import ScanConfig, run_scan
from .report import EXIT_ERROR, EXIT_FINDINGS, EXIT_OK, exit_code, render_json, render_text

log = logging.getLogger("log4shield")

ENV_ROOT = "GITHUB_WORKSPACE"
ENV_KB = "LOG4SHIELD_KB"
ENV_FORMAT = "LOG4SHIELD_FORMAT"
ENV_THRESHOLD = "LOG4SHIELD_THRESHOLD"
ENV_STRICT = "LOG4SHIELD_STRICT"
ENV_GITHUB_OUTPUT = "GITHUB_OUTPUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _threshold(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 10.0:
        raise argparse.ArgumentTypeError("threshold must lie in [0, 10]")
    return value


def _truthy(text: str | None) -> bool:
    return (text or "").strip().lower() in {"1", "true", "yes", "on"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="log4shield", description="Static Log4j vulnerability scanner.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    parser.add_argument("--kb", metavar="FILE", help=f"knowledge base override (env {ENV_KB})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scan = sub.add_parser("scan", help="scan a project tree")
    scan.add_argument("--root", help=f"project root (default: ${ENV_ROOT} or .)")
    scan.add_argument("--format", choices=["text", "json"], help=f"report format (env {ENV_FORMAT}, default text)")
    scan.add_argument("--threshold", type=_threshold,
                      help=f"fail when a finding scores >= this (env {ENV_THRESHOLD}, default 0.0)")
    strict = scan.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_true", default=None,
                        help=f"drop Log4j 1.x appender CVEs without usage evidence (env {ENV_STRICT})")
    strict.add_argument("--lenient", dest="strict", action="store_false", help="keep version-only findings (default)")
    scan.add_argument("--ignore", action="append", default=[], metavar="GLOB", help="extra ignore glob (repeatable)")
    scan.add_argument("--exclude-artifact", action="append", default=[], metavar="ARTIFACT",
                      help="artifactId never treated as Log4j, e.g. log4j-over-slf4j (repeatable)")
    scan.add_argument("--max-file-bytes", type=int, default=ScanFilter().max_file_bytes, help=argparse.SUPPRESS)
    scan.add_argument("--output", "-o", metavar="FILE", help="write the report here instead of stdout")

    kb = sub.add_parser("kb", help="print the CVE knowledge base table")
    kb.add_argument("--format", choices=["text", "json"], default="text")

    ev = sub.add_parser("eval", help="score the scanner against a corpus manifest")
    ev.add_argument("manifest", help="YAML corpus manifest")
    ev.add_argument("--format", choices=["text", "json"], default="text")
    ev.add_argument("--min-accuracy", type=float, default=0.0,
                    help="exit 1 when accuracy falls below this fraction")
    ev.add_argument("--output", "-o", metavar="FILE")
    return parser


def _load_kb(args) -> KnowledgeBase:
    path = args.kb or os.environ.get(ENV_KB)
    return load_kb(path) if path else default_kb()


def _emit(body: bytes, output: str | None) -> None:
    if output:
        Path(output).write_bytes(body)
    else:
        sys.stdout.buffer.write(body)
        sys.stdout.flush()


def _write_github_outputs(report) -> None:
    target = os.environ.get(ENV_GITHUB_OUTPUT)
    if not target:
        return
    with open(target, "a", encoding="utf-8") as fh:
        fh.write(f"verdict={report.verdict.value}\n")
        fh.write(f"findings-count={len(report.findings)}\n")


def _cmd_scan(args) -> int:
    root = args.root or os.environ.get(ENV_ROOT) or "."
    fmt = args.format or os.environ.get(ENV_FORMAT) or "text"
    if fmt not in ("text", "json"):
        print(f"log4shield: error: unsupported format {fmt!r}", file=sys.stderr)
        return EXIT_ERROR
    threshold = args.threshold
    if threshold is None:
        try:
            threshold = _threshold(os.environ.get(ENV_THRESHOLD) or "0.0")
        except argparse.ArgumentTypeError as exc:
            print(f"log4shield: error: {ENV_THRESHOLD}: {exc}", file=sys.stderr)
            return EXIT_ERROR
    strict = args.strict if args.strict is not None else _truthy(os.environ.get(ENV_STRICT))
    config = ScanConfig(
        strict=strict,
        threshold=threshold,
        ignore=tuple(args.ignore),
        exclude_artifacts=tuple(args.exclude_artifact),
        filter=ScanFilter(max_file_bytes=args.max_file_bytes),
        kb=_load_kb(args),
    )
    log.debug("scanning %s (strict=%s, threshold=%.1f)", root, strict, threshold)
    try:
        report = run_scan(root, config)
    except OSError as exc:
        print(f"log4shield: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for w in report.warnings:
        log.warning("%s", w)
    if fmt == "json":
        rendered = render_json(report)
    else:
        color = args.output is None and sys.stdout.isatty() and "NO_COLOR" not in os.environ
        rendered = render_text(report, color=color)
    _emit(rendered.body, args.output)
    _write_github_outputs(report)
    return exit_code(report, threshold)


def _cmd_kb(args) -> int:
    kb = _load_kb(args)
    if args.format == "json":
        import json

        rows = [
            {
                "id": r.id,
                "score": r.base_score,
                "generation": r.generation.value,
                "affected": r.affected.describe() if r.affected else None,
                "patterns": list(r.patterns),
            }
            for r in kb.records
        ]
        _emit((json.dumps(rows, indent=2) + "\n").encode(), None)
        return EXIT_OK
    width = max(len(r.id) for r in kb.records)
    lines = [f"{'CVE Identifier':<{width}}  Score  Gen   Affected"]
    for r in kb.records:
        affected = r.affected.describe() if r.affected else "-"
        lines.append(f"{r.id:<{width}}  {r.base_score:>5.1f}  {r.generation.value:<4}  {affected}")
    _emit(("\n".join(lines) + "\n").encode(), None)
    return EXIT_OK


def _cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    result = run_corpus(manifest, ScanConfig(kb=_load_kb(args)))
    _emit(render_eval(result, args.format), args.output)
    if result.accuracy is None:
        return EXIT_ERROR
    return EXIT_FINDINGS if result.accuracy < args.min_accuracy else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("log4shield: %(levelname)s: %(message)s"))
    log.handlers = [handler]
    log.propagate = False
    log.setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "scan":
            return _cmd_scan(args)
        if args.command == "kb":
            return _cmd_kb(args)
        return _cmd_eval(args)
    except (KbError, ManifestError) as exc:
        print(f"log4shield: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
