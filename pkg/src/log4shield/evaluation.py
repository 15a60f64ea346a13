"""Offline accuracy harness: scan a corpus of project trees against expected verdicts."""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .pipeline import ScanConfig, Verdict, run_scan

__all__ = [
    "ManifestError",
    "CorpusEntry",
    "CorpusManifest",
    "Outcome",
    "EntryResult",
    "EvalResult",
    "load_manifest",
    "score_entry",
    "run_corpus",
    "render_eval",
]


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    expected_verdict: Verdict
    path: Path | None = None
    project: str | None = None
    expected_cves: frozenset[str] | None = None
    notes: str = ""
    strict: bool = False
    exclude_artifacts: tuple[str, ...] = ()
    # a previously recorded scan outcome; when present the tree is not scanned
    recorded_verdict: Verdict | None = None
    recorded_cves: frozenset[str] | None = None


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[CorpusEntry, ...]

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ManifestError(f"duplicate entry names: {', '.join(dupes)}")

    def projects(self) -> dict[str, list[CorpusEntry]]:
        out: dict[str, list[CorpusEntry]] = {}
        for e in self.entries:
            out.setdefault(e.project or e.name, []).append(e)
        return out


def _verdict(value, where: str) -> Verdict:
    try:
        return Verdict(str(value).strip().lower().replace(" ", "_"))
    except ValueError:
        raise ManifestError(f"{where}: verdict must be 'vulnerable' or 'not_vulnerable', got {value!r}") from None


def load_manifest(path: str | os.PathLike) -> CorpusManifest:
    """Read a YAML corpus manifest; entry paths are relative to the manifest file."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ManifestError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise ManifestError(f"{path}: expected a mapping with an 'entries' list")
    base = path.parent
    entries = []
    for i, raw in enumerate(doc["entries"]):
        where = f"{path}: entry {i + 1}"
        if not isinstance(raw, dict) or "name" not in raw or "expected_verdict" not in raw:
            raise ManifestError(f"{where}: needs at least 'name' and 'expected_verdict'")
        recorded = raw.get("recorded")
        if raw.get("path") is None and recorded is None:
            raise ManifestError(f"{where}: needs 'path' or 'recorded'")
        expected_cves = raw.get("expected_cves")
        entries.append(
            CorpusEntry(
                name=str(raw["name"]),
                expected_verdict=_verdict(raw["expected_verdict"], where),
                path=base / raw["path"] if raw.get("path") is not None else None,
                project=raw.get("project"),
                expected_cves=frozenset(expected_cves) if expected_cves is not None else None,
                notes=raw.get("notes", "") or "",
                strict=bool(raw.get("strict", False)),
                exclude_artifacts=tuple(raw.get("exclude_artifacts", ()) or ()),
                recorded_verdict=_verdict(recorded["verdict"], where) if recorded else None,
                recorded_cves=frozenset(recorded.get("cves", ())) if recorded else None,
            )
        )
    return CorpusManifest(tuple(entries))


class Outcome(enum.Enum):
    CORRECT = "correct"
    FALSE_POSITIVE = "false_positive"
    FALSE_NEGATIVE = "false_negative"
    WRONG_CVES = "wrong_cves"
    ERROR = "error"


@dataclass(frozen=True)
class EntryResult:
    name: str
    expected: Verdict
    actual: Verdict | None
    outcome: Outcome
    added_cves: tuple[str, ...] = ()
    missing_cves: tuple[str, ...] = ()
    error: str = ""


@dataclass(frozen=True)
class EvalResult:
    total: int
    correct: int
    false_positives: int
    false_negatives: int
    wrong_cves: int
    errored: int
    accuracy: float | None
    per_entry: tuple[EntryResult, ...] = field(default=())


def score_entry(entry: CorpusEntry, actual: Verdict, actual_cves: frozenset[str]) -> EntryResult:
    added = missing = ()
    if entry.expected_cves is not None:
        added = tuple(sorted(actual_cves - entry.expected_cves))
        missing = tuple(sorted(entry.expected_cves - actual_cves))
    if actual != entry.expected_verdict:
        outcome = Outcome.FALSE_POSITIVE if actual is Verdict.VULNERABLE else Outcome.FALSE_NEGATIVE
    elif added or missing:
        outcome = Outcome.WRONG_CVES
    else:
        outcome = Outcome.CORRECT
    return EntryResult(entry.name, entry.expected_verdict, actual, outcome, added, missing)


def _run_entry(entry: CorpusEntry, config: ScanConfig) -> EntryResult:
    if entry.recorded_verdict is not None:
        return score_entry(entry, entry.recorded_verdict, entry.recorded_cves or frozenset())
    if entry.path is None or not entry.path.is_dir():
        return EntryResult(entry.name, entry.expected_verdict, None, Outcome.ERROR, error=f"missing path: {entry.path}")
    cfg = replace(
        config,
        strict=config.strict or entry.strict,
        exclude_artifacts=(*config.exclude_artifacts, *entry.exclude_artifacts),
    )
    try:
        report = run_scan(entry.path, cfg)
    except OSError as exc:
        return EntryResult(entry.name, entry.expected_verdict, None, Outcome.ERROR, error=str(exc))
    return score_entry(entry, report.verdict, frozenset(f.cve_id for f in report.findings))


def run_corpus(manifest: CorpusManifest, config: ScanConfig = ScanConfig()) -> EvalResult:
    """Scan every entry and tally outcomes.

    Errored entries are reported but excluded from the accuracy denominator.
    Accuracy is rounded to three decimals; ``None`` when nothing was scored.
    """
    results = sorted((_run_entry(e, config) for e in manifest.entries), key=lambda r: r.name)
    counts = {o: 0 for o in Outcome}
    for r in results:
        counts[r.outcome] += 1
    total = len(results) - counts[Outcome.ERROR]
    return EvalResult(
        total=total,
        correct=counts[Outcome.CORRECT],
        false_positives=counts[Outcome.FALSE_POSITIVE],
        false_negatives=counts[Outcome.FALSE_NEGATIVE],
        wrong_cves=counts[Outcome.WRONG_CVES],
        errored=counts[Outcome.ERROR],
        accuracy=round(counts[Outcome.CORRECT] / total, 3) if total else None,
        per_entry=tuple(results),
    )


def _eval_dict(e: EvalResult) -> dict:
    return {
        "total": e.total,
        "correct": e.correct,
        "false_positives": e.false_positives,
        "false_negatives": e.false_negatives,
        "wrong_cves": e.wrong_cves,
        "errored": e.errored,
        "accuracy": e.accuracy,
        "per_entry": [
            {
                "name": r.name,
                "expected": r.expected.value,
                "actual": r.actual.value if r.actual is not None else None,
                "outcome": r.outcome.value,
                "cve_diff": {"added": list(r.added_cves), "missing": list(r.missing_cves)},
                "error": r.error or None,
            }
            for r in e.per_entry
        ],
    }


def render_eval(e: EvalResult, format: str = "text") -> bytes:
    if format == "json":
        return (json.dumps(_eval_dict(e), indent=2) + "\n").encode()
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    if e.accuracy is None:
        msg = "error: corpus has no scorable entries; accuracy is undefined"
        if e.errored:
            msg += f" ({e.errored} errored)"
        return (msg + "\n").encode()
    width = max([len(r.name) for r in e.per_entry] + [5])
    lines = [f"{'entry':<{width}}  {'expected':<14}  {'actual':<14}  outcome"]
    for r in e.per_entry:
        actual = r.actual.value if r.actual is not None else "-"
        line = f"{r.name:<{width}}  {r.expected.value:<14}  {actual:<14}  {r.outcome.value}"
        if r.added_cves:
            line += "  added={" + ", ".join(r.added_cves) + "}"
        if r.missing_cves:
            line += "  missing={" + ", ".join(r.missing_cves) + "}"
        if r.error:
            line += f"  ({r.error})"
        lines.append(line)
    lines.append("")
    lines.append(
        f"accuracy {e.accuracy * 100:.1f}% ({e.correct}/{e.total} correct; "
        f"{e.false_positives} false positive, {e.false_negatives} false negative, "
        f"{e.wrong_cves} wrong CVEs, {e.errored} errored)"
    )
    return ("\n".join(lines) + "\n").encode()
