"""Log4j version strings: parsing, ordering and vulnerability classification."""

from __future__ import annotations

import enum
import functools
import re
from dataclasses import dataclass, field

__all__ = [
    "MalformedVersion",
    "Log4jVersion",
    "VulnClass",
    "VersionRange",
    "parse_version",
    "classify_version",
    "version_in_range",
    "V2_SAFE_FLOOR",
    "SECURITY_PATCH_RELEASES",
]


class MalformedVersion(ValueError):
    """Raised for version text that is not a literal Log4j release string.

    Callers treat the owning dependency as "version undetermined".
    """


# pre-release kinds, ordered; a release sorts after every qualifier
_QUALIFIER_RANK = {"alpha": 0, "beta": 1, "rc": 2}
_RELEASE_RANK = len(_QUALIFIER_RANK)

_VERSION_RE = re.compile(
    r"""
    ^(?P<major>\d+)\.(?P<minor>\d+)(?:\.(?P<patch>\d+))?
    (?:[-.]?(?P<kind>alpha|beta|rc)[-.]?(?P<num>\d+)?)?$
    """,
    re.VERBOSE | re.IGNORECASE,
)


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class Log4jVersion:
    major: int
    minor: int
    patch: int = 0
    qualifier: tuple[str, int] | None = None
    raw: str = field(default="", compare=False)

    @property
    def sort_key(self) -> tuple[int, int, int, int, int]:
        if self.qualifier is None:
            return (self.major, self.minor, self.patch, _RELEASE_RANK, 0)
        kind, num = self.qualifier
        return (self.major, self.minor, self.patch, _QUALIFIER_RANK[kind], num)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Log4jVersion):
            return NotImplemented
        return self.sort_key == other.sort_key

    def __lt__(self, other: Log4jVersion) -> bool:
        if not isinstance(other, Log4jVersion):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __hash__(self) -> int:
        return hash(self.sort_key)

    def render(self) -> str:
        """Canonical text, e.g. ``2.0.0-beta9``; re-parses to an equal version."""
        text = f"{self.major}.{self.minor}.{self.patch}"
        if self.qualifier is not None:
            kind, num = self.qualifier
            text += f"-{kind}{num}"
        return text

    def __str__(self) -> str:
        return self.raw or self.render()


def parse_version(text: str) -> Log4jVersion:
    if not text or not text.strip():
        raise MalformedVersion("empty version string")
    m = _VERSION_RE.match(text.strip())
    if m is None:
        raise MalformedVersion(f"unrecognized version {text!r}")
    qualifier = None
    if m["kind"]:
        qualifier = (m["kind"].lower(), int(m["num"] or 0))
    return Log4jVersion(
        int(m["major"]),
        int(m["minor"]),
        int(m["patch"] or 0),
        qualifier,
        raw=text.strip(),
    )


class VulnClass(enum.Enum):
    V1_VULNERABLE = "v1_vulnerable"
    V2_VULNERABLE = "v2_vulnerable"
    NOT_VULNERABLE = "not_vulnerable"

    @property
    def vulnerable(self) -> bool:
        return self is not VulnClass.NOT_VULNERABLE


V2_SAFE_FLOOR = parse_version("2.17.1")
# backport releases on the Java 6 and Java 7 lines
SECURITY_PATCH_RELEASES = frozenset(
    parse_version(v) for v in ("2.3.1", "2.3.2", "2.12.3", "2.12.4")
)


def classify_version(v: Log4jVersion) -> VulnClass:
    """Aggregate triage class used by the manifest gate.

    Per-CVE applicability is decided by the knowledge base ranges; this only
    answers whether the version warrants a deep scan at all.
    """
    if v.major == 1:
        return VulnClass.V1_VULNERABLE
    if v.major == 2 and v < V2_SAFE_FLOOR and v not in SECURITY_PATCH_RELEASES:
        return VulnClass.V2_VULNERABLE
    return VulnClass.NOT_VULNERABLE


@dataclass(frozen=True)
class VersionRange:
    low: Log4jVersion
    high: Log4jVersion
    exclusions: frozenset[Log4jVersion] = frozenset()

    def __post_init__(self) -> None:
        if self.high < self.low:
            raise ValueError(f"empty range {self.low.render()}..{self.high.render()}")
        for v in self.exclusions:
            if not self.low <= v <= self.high:
                raise ValueError(f"exclusion {v.render()} lies outside {self.describe()}")

    def __contains__(self, v: Log4jVersion) -> bool:
        return version_in_range(v, self)

    def describe(self) -> str:
        text = f"{self.low} to {self.high}"
        if self.exclusions:
            text += " excluding " + ", ".join(str(v) for v in sorted(self.exclusions))
        return text


def version_in_range(v: Log4jVersion, r: VersionRange) -> bool:
    return r.low <= v <= r.high and v not in r.exclusions
