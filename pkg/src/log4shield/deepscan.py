"""Deep scan: search every source file for vulnerable Log4j class references."""

from __future__ import annotations

import enum
import os
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .fswalk import DEFAULT_IGNORED_DIRS, path_key, walk_files
from .kb import PatternRule, default_kb
from .kernel import find_all
from .pom import POM_NAME
from .versions import VulnClass

__all__ = [
    "Form",
    "PatternHit",
    "ScanFilter",
    "DeepScanResult",
    "MisconfigurationSeed",
    "APPENDER_PATTERNS",
    "CONFIG_SUFFIXES",
    "match_patterns",
    "match_bytes",
    "is_scannable",
    "deep_scan",
    "scan_tree",
    "detect_misconfiguration",
]

SNIFF_BYTES = 8192
# dotted references in these files are configuration, not code
CONFIG_SUFFIXES = frozenset({".properties", ".xml", ".yaml", ".yml", ".json", ".jsn", ".conf", ".cfg", ".ini"})
APPENDER_PATTERNS = frozenset({"SMTPAppender", "JMSAppender", "JMSSink", "JDBCAppender", "Chainsaw"})


class Form(enum.Enum):
    DOTTED = "dotted"
    PATH_FORM = "path_form"
    CONFIG_REFERENCE = "config_reference"


@dataclass(frozen=True)
class PatternHit:
    file: str
    line: int
    column: int
    pattern_id: str
    matched_text: str
    form: Form

    @property
    def sort_key(self) -> tuple:
        return (path_key(self.file), self.line, self.column, self.pattern_id)


@dataclass(frozen=True)
class ScanFilter:
    max_file_bytes: int = 16 * 1024 * 1024
    ignored_dirs: frozenset[str] = DEFAULT_IGNORED_DIRS
    binary_detection: bool = True

    def __post_init__(self) -> None:
        if self.max_file_bytes <= 0:
            raise ValueError("max_file_bytes must be positive")


@dataclass
class DeepScanResult:
    hits: list[PatternHit] = field(default_factory=list)
    files_scanned: int = 0
    files_skipped: int = 0
    warnings: list[str] = field(default_factory=list)


def _needles(rules: Sequence[PatternRule]) -> tuple[tuple[bytes, ...], list[tuple[str, bool]]]:
    needles, meta = [], []
    for rule in rules:
        needles.append(rule.dotted_form.encode())
        meta.append((rule.pattern_id, True))
        needles.append(rule.path_form.encode())
        meta.append((rule.pattern_id, False))
    return tuple(needles), meta


def match_bytes(
    data: bytes, rules: Sequence[PatternRule], config: bool = False
) -> list[tuple[str, int, int, str, Form]]:
    """Raw-byte variant of :func:`match_patterns`; columns are file byte offsets."""
    needles, meta = _needles(rules)
    out = []
    for idx, line, col in find_all(data, needles):
        pid, dotted = meta[idx]
        if not dotted:
            form = Form.PATH_FORM
        else:
            form = Form.CONFIG_REFERENCE if config else Form.DOTTED
        out.append((pid, line, col, needles[idx].decode(), form))
    return out


def match_patterns(
    content: str, rules: Sequence[PatternRule] | None = None, config: bool = False
) -> list[tuple[str, int, int, str, Form]]:
    """Find every dotted and path-form occurrence of each rule in ``content``.

    Exact, case-sensitive substring matching; overlapping matches of different
    rules are all reported. ``config`` marks dotted hits as configuration
    references.
    """
    if rules is None:
        rules = default_kb().rules
    return match_bytes(content.encode("utf-8", "surrogateescape"), rules, config)


def is_scannable(
    file: str | os.PathLike,
    first_bytes: bytes,
    filter: ScanFilter = ScanFilter(),
    size: int | None = None,
) -> bool:
    """Whether a file (path relative to the scan root) should be content-scanned."""
    parts = Path(file).parts
    if any(p in filter.ignored_dirs for p in parts[:-1]):
        return False
    if size is None:
        try:
            size = os.stat(file).st_size
        except OSError:
            size = len(first_bytes)
    if size > filter.max_file_bytes:
        return False
    if filter.binary_detection and b"\0" in first_bytes[:SNIFF_BYTES]:
        return False
    return True


def _is_config(rel: str) -> bool:
    name = rel.rsplit("/", 1)[-1].lower()
    return os.path.splitext(name)[1] in CONFIG_SUFFIXES


def _scan_file(rel: str, full: Path, rules, filter: ScanFilter):
    try:
        size = full.stat().st_size
        if size > filter.max_file_bytes:
            return None, None
        data = full.read_bytes()
    except OSError as exc:
        return None, f"{rel}: {exc.strerror or exc}"
    if not is_scannable(rel, data[:SNIFF_BYTES], filter, size=size):
        return None, None
    config = _is_config(rel)
    return [PatternHit(rel, line, col, pid, text, form) for pid, line, col, text, form in match_bytes(data, rules, config)], None


def scan_tree(
    root: str | os.PathLike,
    filter: ScanFilter = ScanFilter(),
    rules: Sequence[PatternRule] | None = None,
    ignore_patterns: Iterable[str] = (),
    workers: int | None = None,
) -> DeepScanResult:
    """Deep scan with metadata: hit list plus file counts and per-file warnings.

    Files named pom.xml are skipped; the manifest scan owns them.
    """
    if rules is None:
        rules = default_kb().rules
    rules = tuple(rules)
    files = [(rel, full) for rel, full in walk_files(root, filter.ignored_dirs, ignore_patterns)
             if rel.rsplit("/", 1)[-1] != POM_NAME]
    result = DeepScanResult()
    if workers is None:
        workers = min(8, os.cpu_count() or 1)

    def job(item):
        return _scan_file(item[0], item[1], rules, filter)

    if workers > 1 and len(files) > 64:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, files, chunksize=32))
    else:
        outcomes = [job(item) for item in files]
    for hits, warning in outcomes:
        if warning:
            result.warnings.append(warning)
        if hits is None:
            result.files_skipped += 1
            continue
        result.files_scanned += 1
        result.hits.extend(hits)
    result.hits.sort(key=lambda h: h.sort_key)
    return result


def deep_scan(root: str | os.PathLike, filter: ScanFilter = ScanFilter(), **kwargs) -> list[PatternHit]:
    """All pattern hits under ``root``, ordered by (file, line, column)."""
    return scan_tree(root, filter, **kwargs).hits


@dataclass(frozen=True)
class MisconfigurationSeed:
    hits: tuple[PatternHit, ...]


def detect_misconfiguration(
    hits: Iterable[PatternHit], version_evidence: VulnClass | None
) -> MisconfigurationSeed | None:
    """Appender references with no determinable Log4j version.

    Without a version the appender CVEs cannot be confirmed or ruled out, so a
    generic misconfiguration finding is raised instead.
    """
    if version_evidence is not None:
        return None
    appender_hits = tuple(h for h in hits if h.pattern_id in APPENDER_PATTERNS)
    if not appender_hits:
        return None
    return MisconfigurationSeed(appender_hits)
