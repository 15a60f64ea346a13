"""Scanner flow: manifest gate, conditional deep scan, CVE enrichment, ranking."""

from __future__ import annotations

import enum
import os
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .deepscan import Form, PatternHit, ScanFilter, detect_misconfiguration, scan_tree
from .fswalk import NoSuchPath, load_ignore_file, path_key
from .kb import MISCONFIGURATION_ID, CveRecord, KnowledgeBase, default_kb
from .pom import DependencyDecl, InitialScanResult, is_log4j_artifact, scan_poms
from .versions import Log4jVersion, VulnClass, classify_version

__all__ = [
    "EvidenceKind",
    "Evidence",
    "SeverityBand",
    "Confidence",
    "Finding",
    "Verdict",
    "Mode",
    "ScanConfig",
    "ScanReport",
    "run_scan",
    "rank_findings",
    "merge_evidence",
]


class EvidenceKind(enum.Enum):
    DEPENDENCY_VERSION = "dependency_version"
    PATTERN_HIT = "pattern_hit"
    CONFIG_REFERENCE = "config_reference"


@dataclass(frozen=True)
class Evidence:
    file: str
    line: int | None
    kind: EvidenceKind
    detail: str = ""

    @property
    def key(self) -> tuple[str, int | None, EvidenceKind]:
        return (self.file, self.line, self.kind)

    @property
    def sort_key(self) -> tuple:
        return (path_key(self.file), self.line or 0, self.kind.value)


class SeverityBand(enum.Enum):
    CRITICAL = "critical"
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"

    @classmethod
    def from_score(cls, score: float) -> SeverityBand:
        if score >= 9.0:
            return cls.CRITICAL
        if score >= 7.0:
            return cls.HIGH
        if score >= 4.0:
            return cls.MEDIUM
        return cls.LOW


class Confidence(enum.Enum):
    CONFIRMED_USAGE = "confirmed-usage"
    VERSION_ONLY = "version-only"


@dataclass(frozen=True)
class Finding:
    cve_id: str
    base_score: float
    evidence: tuple[Evidence, ...]
    affected_versions_note: str
    recommendation: str

    @property
    def severity_band(self) -> SeverityBand:
        return SeverityBand.from_score(self.base_score)

    @property
    def confidence(self) -> Confidence:
        if any(e.kind is not EvidenceKind.DEPENDENCY_VERSION for e in self.evidence):
            return Confidence.CONFIRMED_USAGE
        return Confidence.VERSION_ONLY


class Verdict(enum.Enum):
    NOT_VULNERABLE = "not_vulnerable"
    VULNERABLE = "vulnerable"


class Mode(enum.Enum):
    INITIAL_ONLY = "initial_only"
    DEEP_SCAN = "deep_scan"


@dataclass(frozen=True)
class ScanConfig:
    strict: bool = False
    threshold: float = 0.0
    ignore: tuple[str, ...] = ()
    exclude_artifacts: tuple[str, ...] = ()
    filter: ScanFilter = ScanFilter()
    kb: KnowledgeBase | None = None
    workers: int | None = None


@dataclass
class ScanReport:
    root: str
    verdict: Verdict
    mode_reached: Mode
    findings: list[Finding]
    dependencies_seen: list[DependencyDecl]
    files_scanned: int
    warnings: list[str] = field(default_factory=list)
    started: datetime | None = None
    finished: datetime | None = None
    tool_version: str = __version__


def rank_findings(findings: Iterable[Finding]) -> list[Finding]:
    return sorted(findings, key=lambda f: (-f.base_score, f.cve_id))


def merge_evidence(version_findings: Iterable[Finding], pattern_findings: Iterable[Finding]) -> list[Finding]:
    """Collapse findings to one per CVE, unioning evidence by (file, line, kind)."""
    merged: dict[str, Finding] = {}
    notes: dict[str, list[str]] = {}
    evidence: dict[str, dict[tuple, Evidence]] = {}
    for f in [*version_findings, *pattern_findings]:
        if f.cve_id not in merged:
            merged[f.cve_id] = f
            notes[f.cve_id] = []
            evidence[f.cve_id] = {}
        if f.affected_versions_note and f.affected_versions_note not in notes[f.cve_id]:
            notes[f.cve_id].append(f.affected_versions_note)
        for e in f.evidence:
            evidence[f.cve_id].setdefault(e.key, e)
    return [
        replace(
            f,
            evidence=tuple(sorted(evidence[cid].values(), key=lambda e: e.sort_key)),
            affected_versions_note="; ".join(notes[cid]),
        )
        for cid, f in merged.items()
    ]


def _note(record: CveRecord, versions: Iterable[Log4jVersion]) -> str:
    found = sorted(set(versions))
    parts = []
    if found:
        parts.append("found " + ", ".join(str(v) for v in found))
    if record.affected is not None:
        parts.append("affects " + record.affected.describe())
    return "; ".join(parts)


def _finding(record: CveRecord, evidence: list[Evidence], versions: Iterable[Log4jVersion] = ()) -> Finding:
    return Finding(
        cve_id=record.id,
        base_score=record.base_score,
        evidence=tuple(sorted(evidence, key=lambda e: e.sort_key)),
        affected_versions_note=_note(record, versions),
        recommendation=record.recommendation,
    )


def _dependency_evidence(dep: DependencyDecl) -> Evidence:
    detail = f"{dep.coordinate} {dep.version_text}"
    if dep.version_text != str(dep.resolved_version):
        detail += f" -> {dep.resolved_version}"
    if dep.notes:
        detail += " (" + ", ".join(dep.notes) + ")"
    return Evidence(dep.source_file, dep.line, EvidenceKind.DEPENDENCY_VERSION, detail)


def _hit_evidence(hit: PatternHit) -> Evidence:
    kind = EvidenceKind.CONFIG_REFERENCE if hit.form is Form.CONFIG_REFERENCE else EvidenceKind.PATTERN_HIT
    return Evidence(hit.file, hit.line, kind, f"{hit.pattern_id}: {hit.matched_text}")


def _version_evidence(versions: list[Log4jVersion]) -> VulnClass | None:
    if not versions:
        return None
    classes = {classify_version(v) for v in versions}
    for c in (VulnClass.V2_VULNERABLE, VulnClass.V1_VULNERABLE):
        if c in classes:
            return c
    return VulnClass.NOT_VULNERABLE


def _build_findings(
    initial: InitialScanResult,
    hits: list[PatternHit],
    kb: KnowledgeBase,
    config: ScanConfig,
) -> list[Finding]:
    detected = [
        d.resolved_version
        for d in initial.dependencies
        if d.resolved_version is not None and is_log4j_artifact(d.artifact_id, config.exclude_artifacts)
    ]

    version_findings = []
    for dep, _vclass in initial.vulnerable:
        for record in kb.cves_for_version(dep.resolved_version):
            version_findings.append(_finding(record, [_dependency_evidence(dep)], [dep.resolved_version]))

    pattern_findings = []
    for hit in hits:
        if detected:
            records = {r.id: r for v in detected for r in kb.cves_for_pattern(hit.pattern_id, v)}
            for record in records.values():
                applicable = [v for v in detected if record.applies_to(v)]
                pattern_findings.append(_finding(record, [_hit_evidence(hit)], applicable))
        else:
            for record in kb.cves_for_pattern(hit.pattern_id):
                pattern_findings.append(_finding(record, [_hit_evidence(hit)]))

    seed = detect_misconfiguration(hits, _version_evidence(detected))
    if seed is not None:
        record = kb.record(MISCONFIGURATION_ID)
        pattern_findings.append(
            replace(_finding(record, [_hit_evidence(h) for h in seed.hits]), affected_versions_note="no Log4j version determined")
        )

    findings = merge_evidence(version_findings, pattern_findings)
    if config.strict:
        # v1 appender CVEs need evidence that the appender is actually used
        gated = {r.id for r in kb.records if r.pattern_gated}
        findings = [f for f in findings if not (f.cve_id in gated and f.confidence is Confidence.VERSION_ONLY)]
    return rank_findings(findings)


def _now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def run_scan(root: str | os.PathLike, config: ScanConfig = ScanConfig()) -> ScanReport:
    """Scan one project tree and return the ranked report.

    The deep scan runs when any pom declares a vulnerable or undeterminable
    Log4j version, any pom fails to parse, or the tree has no pom at all.
    """
    started = _now()
    root_path = Path(root)
    if not root_path.is_dir():
        raise NoSuchPath(f"no such directory: {root}")
    kb = config.kb or default_kb()
    ignore = (*config.ignore, *load_ignore_file(root_path))

    initial = scan_poms(root_path, config.filter.ignored_dirs, ignore, config.exclude_artifacts)
    warnings = list(initial.errors)
    files_scanned = len(initial.scanned_files)
    hits: list[PatternHit] = []
    mode = Mode.INITIAL_ONLY
    if initial.needs_deep_scan:
        mode = Mode.DEEP_SCAN
        deep = scan_tree(root_path, config.filter, kb.rules, ignore, config.workers)
        hits = deep.hits
        warnings.extend(deep.warnings)
        files_scanned += deep.files_scanned

    findings = _build_findings(initial, hits, kb, config)
    return ScanReport(
        root=str(root),
        verdict=Verdict.VULNERABLE if findings else Verdict.NOT_VULNERABLE,
        mode_reached=mode,
        findings=findings,
        dependencies_seen=list(initial.dependencies),
        files_scanned=files_scanned,
        warnings=warnings,
        started=started,
        finished=_now(),
    )
