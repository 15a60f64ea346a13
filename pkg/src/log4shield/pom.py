"""Manifest-level scan: find pom.xml files and classify their Log4j dependencies."""

from __future__ import annotations

import enum
import logging
import os
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from xml.parsers import expat

from .fswalk import DEFAULT_IGNORED_DIRS, walk_files
from .versions import Log4jVersion, MalformedVersion, VulnClass, classify_version, parse_version

log = logging.getLogger(__name__)

POM_NAME = "pom.xml"

__all__ = [
    "Provenance",
    "DependencyDecl",
    "InitialScanResult",
    "PomParseError",
    "scan_pom",
    "scan_poms",
    "discover_poms",
    "resolve_placeholder",
    "is_log4j_artifact",
]


class Provenance(enum.Enum):
    LITERAL = "literal"
    PROPERTY_RESOLVED = "property_resolved"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class DependencyDecl:
    group_id: str
    artifact_id: str
    version_text: str | None
    resolved_version: Log4jVersion | None
    source_file: str
    line: int | None
    provenance: Provenance
    scope: str | None = None
    optional: bool = False
    section: str = "dependencies"

    @property
    def coordinate(self) -> str:
        return f"{self.group_id}:{self.artifact_id}"

    @property
    def notes(self) -> list[str]:
        """Context that weakens the evidence (test scope, optional, managed pin)."""
        out = []
        if self.scope:
            out.append(f"scope={self.scope}")
        if self.optional:
            out.append("optional")
        if self.section != "dependencies":
            out.append(self.section)
        return out


@dataclass
class InitialScanResult:
    dependencies: list[DependencyDecl] = field(default_factory=list)
    vulnerable: list[tuple[DependencyDecl, VulnClass]] = field(default_factory=list)
    # log4j dependencies whose version could not be determined
    undetermined: list[DependencyDecl] = field(default_factory=list)
    parse_failed: bool = False
    scanned_files: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def extend(self, other: InitialScanResult) -> None:
        self.dependencies.extend(other.dependencies)
        self.vulnerable.extend(other.vulnerable)
        self.undetermined.extend(other.undetermined)
        self.parse_failed |= other.parse_failed
        self.scanned_files.extend(other.scanned_files)
        self.errors.extend(other.errors)

    @property
    def needs_deep_scan(self) -> bool:
        return self.parse_failed or bool(self.vulnerable) or bool(self.undetermined) or not self.scanned_files


class PomParseError(ValueError):
    pass


# --- minimal XML tree with line numbers ---------------------------------------


class _Node:
    __slots__ = ("tag", "line", "children", "parts", "parent")

    def __init__(self, tag: str, line: int, parent: _Node | None):
        self.tag = tag
        self.line = line
        self.children: list[_Node] = []
        self.parts: list[str] = []
        self.parent = parent

    @property
    def text(self) -> str:
        return "".join(self.parts).strip()

    def child(self, tag: str) -> _Node | None:
        for c in self.children:
            if c.tag == tag:
                return c
        return None

    def child_text(self, tag: str) -> str | None:
        c = self.child(tag)
        return c.text if c is not None else None

    def iter(self, tag: str):
        stack = [self]
        while stack:
            node = stack.pop()
            if node.tag == tag:
                yield node
            stack.extend(reversed(node.children))

    def ancestors(self):
        node = self.parent
        while node is not None:
            yield node.tag
            node = node.parent


def _local(name: str) -> str:
    # expat reports namespaced names as "uri<sep>local"
    return name.rsplit(" ", 1)[-1].rsplit(":", 1)[-1]


def _parse_xml(data: bytes) -> _Node:
    parser = expat.ParserCreate(namespace_separator=" ")
    root: list[_Node] = []
    stack: list[_Node] = []

    def start(name, _attrs):
        node = _Node(_local(name), parser.CurrentLineNumber, stack[-1] if stack else None)
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(_name):
        stack.pop()

    def chars(text):
        if stack:
            stack[-1].parts.append(text)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise PomParseError(str(exc)) from None
    if not root:
        raise PomParseError("document has no root element")
    return root[0]


# --- properties ----------------------------------------------------------------

_PLACEHOLDER = re.compile(r"\$\{([^}]*)\}")


def resolve_placeholder(version_text: str, properties: dict[str, str]) -> str | None:
    """Substitute ``${key}`` references from ``properties``, one level deep.

    Literal text comes back unchanged; any unknown key makes the whole value
    unresolvable (``None``).
    """
    missing = False

    def sub(m: re.Match) -> str:
        nonlocal missing
        key = m.group(1).strip()
        if key not in properties:
            missing = True
            return m.group(0)
        return properties[key]

    out = _PLACEHOLDER.sub(sub, version_text)
    return None if missing else out


def _properties(root: _Node) -> dict[str, str]:
    props = {}
    section = root.child("properties")
    if section is not None:
        for c in section.children:
            props[c.tag] = c.text
    return props


# --- scanning --------------------------------------------------------------------


def is_log4j_artifact(artifact_id: str, exclude: Iterable[str] = ()) -> bool:
    aid = artifact_id.lower()
    return "log4j" in aid and aid not in {e.lower() for e in exclude}


def _section(node: _Node) -> str:
    tags = set(node.ancestors())
    if "plugin" in tags:
        return "plugin"
    if "dependencyManagement" in tags:
        return "dependencyManagement"
    return "dependencies"


def scan_pom(
    file: str | os.PathLike,
    root: str | os.PathLike | None = None,
    exclude_artifacts: Iterable[str] = (),
) -> InitialScanResult:
    """Classify every Log4j dependency declared in one pom.xml.

    Any parse failure yields an empty result with ``parse_failed`` set; the
    caller must then fall back to a deep scan.
    """
    path = Path(file)
    source = path.relative_to(root).as_posix() if root is not None else path.as_posix()
    result = InitialScanResult(scanned_files=[source])
    exclude = tuple(exclude_artifacts)
    try:
        tree = _parse_xml(path.read_bytes())
    except (OSError, PomParseError) as exc:
        reason = exc.strerror if isinstance(exc, OSError) else str(exc)
        log.debug("could not parse %s: %s", source, reason)
        result.parse_failed = True
        result.errors.append(f"{source}: {reason}")
        return result

    props = _properties(tree)
    for dep in tree.iter("dependency"):
        artifact = dep.child_text("artifactId") or ""
        group = dep.child_text("groupId") or ""
        raw = dep.child_text("version")
        version_node = dep.child("version")
        resolved: Log4jVersion | None = None
        provenance = Provenance.UNRESOLVED
        if raw:
            text = resolve_placeholder(raw, props)
            if text is not None:
                try:
                    resolved = parse_version(text)
                    provenance = Provenance.PROPERTY_RESOLVED if "${" in raw else Provenance.LITERAL
                except MalformedVersion:
                    resolved = None
        decl = DependencyDecl(
            group_id=group,
            artifact_id=artifact,
            version_text=raw or None,
            resolved_version=resolved,
            source_file=source,
            line=(version_node or dep).line,
            provenance=provenance,
            scope=dep.child_text("scope") or None,
            optional=(dep.child_text("optional") or "").lower() == "true",
            section=_section(dep),
        )
        result.dependencies.append(decl)
        if not is_log4j_artifact(artifact, exclude):
            continue
        if resolved is None:
            result.undetermined.append(decl)
            continue
        vclass = classify_version(resolved)
        if vclass.vulnerable:
            result.vulnerable.append((decl, vclass))
    return result


def discover_poms(
    root: str | os.PathLike,
    ignored_dirs: Iterable[str] = DEFAULT_IGNORED_DIRS,
    ignore_patterns: Iterable[str] = (),
) -> list[Path]:
    return [full for rel, full in walk_files(root, ignored_dirs, ignore_patterns) if rel.rsplit("/", 1)[-1] == POM_NAME]


def scan_poms(
    root: str | os.PathLike,
    ignored_dirs: Iterable[str] = DEFAULT_IGNORED_DIRS,
    ignore_patterns: Iterable[str] = (),
    exclude_artifacts: Iterable[str] = (),
) -> InitialScanResult:
    """Discover and scan every pom under ``root``; results are ordered by path."""
    combined = InitialScanResult()
    for pom in discover_poms(root, ignored_dirs, ignore_patterns):
        combined.extend(scan_pom(pom, root, exclude_artifacts))
    return combined
