"""Render scan reports as text or JSON and map them to CI exit codes."""

from __future__ import annotations

import enum
import json
import textwrap
from dataclasses import dataclass
from datetime import datetime
from importlib import resources

from .pipeline import (
    Evidence,
    EvidenceKind,
    Finding,
    Mode,
    ScanReport,
    SeverityBand,
    Verdict,
)
from .pom import DependencyDecl, Provenance
from .versions import MalformedVersion, parse_version

__all__ = [
    "SCHEMA_VERSION",
    "MAX_TEXT_WIDTH",
    "Format",
    "RenderedReport",
    "render_text",
    "render_json",
    "report_to_dict",
    "report_from_json",
    "exit_code",
    "json_schema",
    "EXIT_OK",
    "EXIT_FINDINGS",
    "EXIT_ERROR",
]

SCHEMA_VERSION = "1.0"
MAX_TEXT_WIDTH = 120

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


class Format(enum.Enum):
    TEXT = "text"
    JSON = "json"


@dataclass(frozen=True)
class RenderedReport:
    format: Format
    body: bytes
    schema_version: str = SCHEMA_VERSION

    @property
    def text(self) -> str:
        return self.body.decode("utf-8")


# --- text ---------------------------------------------------------------------------

_KIND_LABEL = {
    EvidenceKind.DEPENDENCY_VERSION: "dependency",
    EvidenceKind.PATTERN_HIT: "class reference",
    EvidenceKind.CONFIG_REFERENCE: "config reference",
}
_BAND_COLOR = {
    SeverityBand.CRITICAL: "\033[1;31m",
    SeverityBand.HIGH: "\033[31m",
    SeverityBand.MEDIUM: "\033[33m",
    SeverityBand.LOW: "\033[36m",
}
_RESET = "\033[0m"


def _wrap(line: str, width: int = MAX_TEXT_WIDTH) -> list[str]:
    if len(line) <= width:
        return [line]
    indent = line[: len(line) - len(line.lstrip())]
    return textwrap.wrap(
        line.strip(),
        width=width,
        initial_indent=indent,
        subsequent_indent=indent + "  ",
        break_long_words=True,
        break_on_hyphens=False,
    )


def _location(e: Evidence) -> str:
    return f"{e.file}:{e.line}" if e.line is not None else e.file


def render_text(r: ScanReport, color: bool = False) -> RenderedReport:
    verdict = "VULNERABLE" if r.verdict is Verdict.VULNERABLE else "NOT VULNERABLE"
    mode = "deep scan" if r.mode_reached is Mode.DEEP_SCAN else "initial scan only"
    lines = [
        f"log4shield {r.tool_version} - scan of {r.root}",
        f"Verdict: {verdict} | Mode: {mode} | Files scanned: {r.files_scanned} | Findings: {len(r.findings)}",
    ]
    for w in r.warnings:
        lines.append(f"warning: {w}")
    lines.append("")
    if not r.findings:
        lines.append("No vulnerabilities found.")
    for n, f in enumerate(r.findings, 1):
        band = f.severity_band.value.upper()
        if color:
            band = f"{_BAND_COLOR[f.severity_band]}{band}{_RESET}"
        lines.append(f"[{n}] {f.cve_id}  score {f.base_score:.1f}  {band}  ({f.confidence.value})")
        if f.affected_versions_note:
            lines.append(f"    Versions: {f.affected_versions_note}")
        lines.append("    Evidence:")
        for e in f.evidence:
            lines.append(f"      {_location(e)}  [{_KIND_LABEL[e.kind]}]  {e.detail}".rstrip())
        lines.append("    Recommendation:")
        lines.append(f"      {f.recommendation}")
        lines.append("")
    out = []
    for line in lines:
        out.extend(_wrap(line) if line else [""])
    body = "\n".join(out).rstrip("\n") + "\n"
    return RenderedReport(Format.TEXT, body.encode("utf-8"))


# --- json -----------------------------------------------------------------------------


def _ts(value: datetime | None) -> str | None:
    return value.isoformat() if value is not None else None


def _dependency_dict(d: DependencyDecl) -> dict:
    return {
        "group_id": d.group_id,
        "artifact_id": d.artifact_id,
        "version_text": d.version_text,
        "resolved_version": str(d.resolved_version) if d.resolved_version is not None else None,
        "source_file": d.source_file,
        "line": d.line,
        "provenance": d.provenance.value,
        "scope": d.scope,
        "optional": d.optional,
        "section": d.section,
    }


def _finding_dict(f: Finding) -> dict:
    return {
        "cve_id": f.cve_id,
        "score": f.base_score,
        "severity": f.severity_band.value,
        "confidence": f.confidence.value,
        "affected_versions": f.affected_versions_note,
        "evidence": [
            {"file": e.file, "line": e.line, "kind": e.kind.value, "detail": e.detail} for e in f.evidence
        ],
        "recommendation": f.recommendation,
    }


def report_to_dict(r: ScanReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "log4shield", "version": r.tool_version},
        "root": r.root,
        "verdict": r.verdict.value,
        "mode_reached": r.mode_reached.value,
        "started": _ts(r.started),
        "finished": _ts(r.finished),
        "files_scanned": r.files_scanned,
        "finding_count": len(r.findings),
        "max_score": max((f.base_score for f in r.findings), default=None),
        "findings": [_finding_dict(f) for f in r.findings],
        "dependencies": [_dependency_dict(d) for d in r.dependencies_seen],
        "warnings": list(r.warnings),
    }


def render_json(r: ScanReport) -> RenderedReport:
    body = json.dumps(report_to_dict(r), indent=2, ensure_ascii=False) + "\n"
    return RenderedReport(Format.JSON, body.encode("utf-8"))


def _parse_dt(value: str | None) -> datetime | None:
    return datetime.fromisoformat(value) if value else None


def _parse_dependency(d: dict) -> DependencyDecl:
    resolved = None
    if d.get("resolved_version"):
        try:
            resolved = parse_version(d["resolved_version"])
        except MalformedVersion:
            resolved = None
    return DependencyDecl(
        group_id=d.get("group_id", ""),
        artifact_id=d.get("artifact_id", ""),
        version_text=d.get("version_text"),
        resolved_version=resolved,
        source_file=d.get("source_file", ""),
        line=d.get("line"),
        provenance=Provenance(d.get("provenance", Provenance.UNRESOLVED.value)),
        scope=d.get("scope"),
        optional=bool(d.get("optional", False)),
        section=d.get("section", "dependencies"),
    )


def report_from_json(data: str | bytes | dict) -> ScanReport:
    """Rebuild a :class:`ScanReport` from :func:`render_json` output.

    Unknown fields are ignored so newer minor schema revisions still load.
    Derived fields (severity, confidence, counts) are recomputed, not read.
    """
    doc = json.loads(data) if isinstance(data, (str, bytes)) else data
    major = str(doc.get("schema_version", SCHEMA_VERSION)).split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise ValueError(f"unsupported report schema {doc.get('schema_version')!r}")
    findings = [
        Finding(
            cve_id=f["cve_id"],
            base_score=float(f["score"]),
            evidence=tuple(
                Evidence(e["file"], e.get("line"), EvidenceKind(e["kind"]), e.get("detail", "")) for e in f["evidence"]
            ),
            affected_versions_note=f.get("affected_versions", ""),
            recommendation=f["recommendation"],
        )
        for f in doc.get("findings", [])
    ]
    return ScanReport(
        root=doc["root"],
        verdict=Verdict(doc["verdict"]),
        mode_reached=Mode(doc["mode_reached"]),
        findings=findings,
        dependencies_seen=[_parse_dependency(d) for d in doc.get("dependencies", [])],
        files_scanned=int(doc.get("files_scanned", 0)),
        warnings=list(doc.get("warnings", [])),
        started=_parse_dt(doc.get("started")),
        finished=_parse_dt(doc.get("finished")),
        tool_version=doc.get("tool", {}).get("version", ""),
    )


def json_schema() -> dict:
    text = resources.files("log4shield").joinpath("data/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


# --- exit codes ---------------------------------------------------------------------


def exit_code(r: ScanReport, threshold: float) -> int:
    """0 when no finding reaches ``threshold``, 1 otherwise. 2 is left to callers for errors."""
    if not 0.0 <= threshold <= 10.0:
        raise ValueError(f"threshold must lie in [0, 10], got {threshold}")
    return EXIT_FINDINGS if any(f.base_score >= threshold for f in r.findings) else EXIT_OK
