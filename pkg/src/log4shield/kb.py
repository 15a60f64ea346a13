"""CVE knowledge base: records, pattern rules and the CVSS score helper.

The data lives in ``data/kb.yaml``. It is validated on load against the
node tree produced by the YAML composer so that every error carries the line
it came from.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from decimal import ROUND_CEILING, Decimal, InvalidOperation
from functools import lru_cache
from importlib import resources
from pathlib import Path

import yaml

from .versions import Log4jVersion, MalformedVersion, VersionRange, parse_version, version_in_range

__all__ = [
    "KbError",
    "UnknownCve",
    "UnknownPattern",
    "NegativeInput",
    "Generation",
    "PatternRule",
    "CveRecord",
    "KnowledgeBase",
    "CvssInputs",
    "compute_base_score",
    "default_kb",
    "load_kb",
    "kb_contents",
    "cves_for_version",
    "cves_for_pattern",
    "recommendation_for",
    "MISCONFIGURATION_ID",
]

MISCONFIGURATION_ID = "Potential misconfiguration"
SCHEMA_VERSION = 1


class KbError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<kb>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class UnknownCve(KeyError):
    pass


class UnknownPattern(KeyError):
    pass


class NegativeInput(ValueError):
    pass


class Generation(enum.Enum):
    V1 = "V1"
    V2 = "V2"
    BOTH = "Both"


@dataclass(frozen=True)
class PatternRule:
    pattern_id: str
    dotted_form: str
    path_form: str
    linked_cves: tuple[str, ...]


@dataclass(frozen=True)
class CveRecord:
    id: str
    base_score: float
    generation: Generation
    affected: VersionRange | None
    patterns: tuple[str, ...]
    recommendation: str

    @property
    def version_only(self) -> bool:
        return not self.patterns

    @property
    def pattern_gated(self) -> bool:
        # v1 CVEs tied to a specific appender/class: a version alone is weak evidence
        return self.generation is Generation.V1 and bool(self.patterns)

    def applies_to(self, v: Log4jVersion) -> bool:
        return self.affected is not None and version_in_range(v, self.affected)


def _by_severity(record: CveRecord) -> tuple[float, str]:
    return (-record.base_score, record.id)


class KnowledgeBase:
    """Immutable, validated view over one KB file."""

    def __init__(self, records: list[CveRecord], rules: list[PatternRule], source: str = "<kb>"):
        self.source = source
        self._records = tuple(records)
        self._rules = tuple(rules)
        self._by_id = {r.id: r for r in records}
        self._rules_by_id = {r.pattern_id: r for r in rules}

    @property
    def records(self) -> tuple[CveRecord, ...]:
        return self._records

    @property
    def rules(self) -> tuple[PatternRule, ...]:
        return self._rules

    def record(self, cve_id: str) -> CveRecord:
        try:
            return self._by_id[cve_id]
        except KeyError:
            raise UnknownCve(cve_id) from None

    def rule(self, pattern_id: str) -> PatternRule:
        try:
            return self._rules_by_id[pattern_id]
        except KeyError:
            raise UnknownPattern(pattern_id) from None

    def cves_for_version(self, v: Log4jVersion) -> list[CveRecord]:
        return sorted((r for r in self._records if r.applies_to(v)), key=_by_severity)

    def cves_for_pattern(self, pattern_id: str, v: Log4jVersion | None = None) -> list[CveRecord]:
        records = [self.record(c) for c in self.rule(pattern_id).linked_cves]
        if v is not None:
            records = [r for r in records if r.applies_to(v)]
        return records

    def recommendation_for(self, cve_id: str) -> str:
        return self.record(cve_id).recommendation


# --- loading -----------------------------------------------------------------


class _Loader:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, message: str, node: yaml.Node | None = None) -> KbError:
        line = node.start_mark.line + 1 if node is not None else None
        return KbError(message, line, self.source)

    def mapping(self, node: yaml.Node, what: str) -> dict[str, tuple[yaml.Node, yaml.Node]]:
        if not isinstance(node, yaml.MappingNode):
            raise self.fail(f"{what} must be a mapping", node)
        out = {}
        for key, value in node.value:
            if not isinstance(key, yaml.ScalarNode):
                raise self.fail(f"{what}: keys must be scalars", key)
            if key.value in out:
                raise self.fail(f"{what}: duplicate key {key.value!r}", key)
            out[key.value] = (key, value)
        return out

    def seq(self, node: yaml.Node, what: str) -> list[yaml.Node]:
        if not isinstance(node, yaml.SequenceNode):
            raise self.fail(f"{what} must be a list", node)
        return list(node.value)

    def scalar(self, node: yaml.Node, what: str) -> str:
        if not isinstance(node, yaml.ScalarNode) or node.tag.endswith(":null"):
            raise self.fail(f"{what} must be a scalar value", node)
        return node.value

    def required(self, fields, name: str, parent: yaml.Node, what: str) -> yaml.Node:
        if name not in fields:
            raise self.fail(f"{what}: missing required field {name!r}", parent)
        return fields[name][1]

    def version(self, node: yaml.Node, what: str) -> Log4jVersion:
        try:
            return parse_version(self.scalar(node, what))
        except MalformedVersion as exc:
            raise self.fail(f"{what}: {exc}", node) from None

    def load(self) -> KnowledgeBase:
        try:
            root = yaml.compose(self.text, Loader=yaml.SafeLoader)
        except yaml.MarkedYAMLError as exc:
            line = exc.problem_mark.line + 1 if exc.problem_mark else None
            raise KbError(f"YAML syntax error: {exc.problem}", line, self.source) from None
        if root is None:
            raise KbError("empty knowledge base", None, self.source)
        top = self.mapping(root, "top level")
        schema_node = self.required(top, "schema", root, "top level")
        if self.scalar(schema_node, "schema") != str(SCHEMA_VERSION):
            raise self.fail(f"unsupported schema version (expected {SCHEMA_VERSION})", schema_node)

        rules = [self.pattern(n) for n in self.seq(self.required(top, "patterns", root, "top level"), "patterns")]
        cve_nodes = self.seq(self.required(top, "cves", root, "top level"), "cves")
        records = [self.cve(n) for n in cve_nodes]

        seen: dict[str, int] = {}
        for rec, node in zip(records, cve_nodes):
            if rec.id in seen:
                raise self.fail(f"duplicate CVE id {rec.id!r}", node)
            seen[rec.id] = node.start_mark.line + 1
        rule_ids = {r.pattern_id for r in rules}
        if len(rule_ids) != len(rules):
            raise KbError("duplicate pattern id", None, self.source)

        # closure in both directions
        for rec, node in zip(records, cve_nodes):
            for pid in rec.patterns:
                if pid not in rule_ids:
                    raise self.fail(f"{rec.id}: unknown pattern {pid!r}", node)
                if rec.id not in next(r for r in rules if r.pattern_id == pid).linked_cves:
                    raise self.fail(f"{rec.id}: pattern {pid!r} does not list this CVE", node)
        pattern_nodes = self.seq(top["patterns"][1], "patterns")
        for rule, node in zip(rules, pattern_nodes):
            for cid in rule.linked_cves:
                if cid not in seen:
                    raise self.fail(f"pattern {rule.pattern_id}: unknown CVE {cid!r}", node)
                if rule.pattern_id not in next(r for r in records if r.id == cid).patterns:
                    raise self.fail(f"pattern {rule.pattern_id}: {cid} does not list this pattern", node)
        return KnowledgeBase(records, rules, self.source)

    def pattern(self, node: yaml.Node) -> PatternRule:
        f = self.mapping(node, "pattern")
        pid = self.scalar(self.required(f, "id", node, "pattern"), "pattern id")
        dotted = self.scalar(self.required(f, "dotted", node, pid), f"{pid}.dotted")
        path_node = self.required(f, "path", node, pid)
        path = self.scalar(path_node, f"{pid}.path")
        if path != dotted.replace(".", "/"):
            raise self.fail(f"{pid}: path form does not name the same class as the dotted form", path_node)
        cves_node = self.required(f, "cves", node, pid)
        cves = tuple(self.scalar(n, f"{pid}.cves") for n in self.seq(cves_node, f"{pid}.cves"))
        if not cves:
            raise self.fail(f"{pid}: cves must not be empty", cves_node)
        return PatternRule(pid, dotted, path, cves)

    def cve(self, node: yaml.Node) -> CveRecord:
        f = self.mapping(node, "cve")
        cid = self.scalar(self.required(f, "id", node, "cve"), "cve id")
        score_node = self.required(f, "score", node, cid)
        try:
            score = Decimal(self.scalar(score_node, f"{cid}.score"))
        except InvalidOperation:
            raise self.fail(f"{cid}: score is not a number", score_node) from None
        if not score.is_finite() or not Decimal(0) <= score <= Decimal(10):
            raise self.fail(f"{cid}: score must lie in [0.0, 10.0]", score_node)
        if score != score.quantize(Decimal("0.1")):
            raise self.fail(f"{cid}: score must have one decimal digit", score_node)
        gen_node = self.required(f, "generation", node, cid)
        try:
            generation = Generation(self.scalar(gen_node, f"{cid}.generation"))
        except ValueError:
            raise self.fail(f"{cid}: generation must be V1, V2 or Both", gen_node) from None

        affected = None
        if "range" in f:
            range_node = f["range"][1]
            rf = self.mapping(range_node, f"{cid}.range")
            low = self.version(self.required(rf, "low", range_node, f"{cid}.range"), f"{cid}.range.low")
            high = self.version(self.required(rf, "high", range_node, f"{cid}.range"), f"{cid}.range.high")
            excl = frozenset()
            if "exclude" in rf:
                excl = frozenset(
                    self.version(n, f"{cid}.range.exclude")
                    for n in self.seq(rf["exclude"][1], f"{cid}.range.exclude")
                )
            try:
                affected = VersionRange(low, high, excl)
            except ValueError as exc:
                raise self.fail(f"{cid}: {exc}", range_node) from None

        patterns: tuple[str, ...] = ()
        if "patterns" in f:
            patterns = tuple(self.scalar(n, f"{cid}.patterns") for n in self.seq(f["patterns"][1], f"{cid}.patterns"))
        rec_node = self.required(f, "recommendation", node, cid)
        recommendation = " ".join(self.scalar(rec_node, f"{cid}.recommendation").split())
        if not recommendation:
            raise self.fail(f"{cid}: recommendation must not be empty", rec_node)
        if affected is None and patterns:
            raise self.fail(f"{cid}: pattern-linked records need a version range", node)
        return CveRecord(cid, float(score), generation, affected, patterns, recommendation)


def load_kb(path: str | os.PathLike | None = None, text: str | None = None) -> KnowledgeBase:
    """Load and validate a KB from ``text``, a file path, or the bundled file."""
    if text is not None:
        return _Loader(text, "<string>").load()
    if path is not None:
        p = Path(path)
        try:
            data = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise KbError(f"cannot read knowledge base: {exc.strerror}", None, str(p)) from None
        return _Loader(data, str(p)).load()
    data = resources.files("log4shield").joinpath("data/kb.yaml").read_text(encoding="utf-8")
    return _Loader(data, "kb.yaml").load()


@lru_cache(maxsize=1)
def default_kb() -> KnowledgeBase:
    return load_kb()


def kb_contents(kb: KnowledgeBase | None = None) -> list[CveRecord]:
    return list((kb or default_kb()).records)


def cves_for_version(v: Log4jVersion, kb: KnowledgeBase | None = None) -> list[CveRecord]:
    return (kb or default_kb()).cves_for_version(v)


def cves_for_pattern(pattern_id: str, v: Log4jVersion | None = None, kb: KnowledgeBase | None = None) -> list[CveRecord]:
    return (kb or default_kb()).cves_for_pattern(pattern_id, v)


def recommendation_for(cve_id: str, kb: KnowledgeBase | None = None) -> str:
    return (kb or default_kb()).recommendation_for(cve_id)


# --- CVSS --------------------------------------------------------------------


@dataclass(frozen=True)
class CvssInputs:
    impact: float
    exploitability: float


_MAX_SCORE = Decimal("10.0")


def _as_decimal(value, name: str) -> Decimal:
    if isinstance(value, float) and not math.isfinite(value):
        raise NegativeInput(f"{name} must be finite")
    d = value if isinstance(value, Decimal) else Decimal(str(value))
    if not d.is_finite():
        raise NegativeInput(f"{name} must be finite")
    if d < 0:
        raise NegativeInput(f"{name} must be non-negative, got {value}")
    return d


def compute_base_score(inputs: CvssInputs) -> float:
    """Impact plus exploitability, rounded up to one decimal and capped at 10.0.

    Inputs go through ``str`` so 5.9 + 3.9 is summed as the decimals the user
    wrote, not as their binary approximations.
    """
    total = _as_decimal(inputs.impact, "impact") + _as_decimal(inputs.exploitability, "exploitability")
    return float(min(total.quantize(Decimal("0.1"), rounding=ROUND_CEILING), _MAX_SCORE))
