"""Independent reference implementations used by the tests.

Nothing here imports log4shield. Version ordering comes from the position of
a release in tests/data/log4j_releases.txt (kept in release-number order by
hand), never from the package's parser.
"""

from decimal import Decimal
from fractions import Fraction
from pathlib import Path

RELEASES_FILE = Path(__file__).parent / "data" / "log4j_releases.txt"


def releases() -> list[str]:
    lines = RELEASES_FILE.read_text().splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


def _pos(v: str) -> int:
    return releases().index(v)


PATCHES = {"2.3.1", "2.3.2", "2.12.3", "2.12.4"}

# (low, high, excluded) per CVE, restated by hand from the advisories.
CVE_RANGES = {
    "CVE-2021-44228": ("2.0-beta9", "2.14.1", PATCHES),
    "CVE-2021-45046": ("2.0-beta9", "2.15.0", PATCHES),
    "CVE-2021-45105": ("2.0-beta9", "2.16.0", PATCHES),
    "CVE-2021-44832": ("2.0-beta9", "2.17.0", {"2.3.2", "2.12.4"}),
    "CVE-2020-9488": ("2.0-beta9", "2.13.0", {"2.12.3", "2.12.4"}),
    "CVE-2019-17571": ("1.2.4", "1.2.17", set()),
    "CVE-2021-4104": ("1.2.4", "1.2.17", set()),
    "CVE-2022-23302": ("1.2.4", "1.2.17", set()),
    "CVE-2022-23305": ("1.2.4", "1.2.17", set()),
    "CVE-2022-23307": ("1.2.4", "1.2.17", set()),
}


def oracle_class(v: str) -> str:
    """Aggregate gate by list position: v1 always, v2 below 2.17.1 minus patches."""
    if v.startswith("1."):
        return "v1"
    if v.startswith("2.") and _pos(v) < _pos("2.17.1") and v not in PATCHES:
        return "v2"
    return "none"


def oracle_cves(v: str) -> set[str]:
    out = set()
    for cve, (low, high, excluded) in CVE_RANGES.items():
        if _pos(low) <= _pos(v) <= _pos(high) and v not in excluded:
            out.add(cve)
    return out


def oracle_score(impact, exploitability) -> Decimal:
    """Exact rational sum, ceiling to tenths, capped at 10."""
    total = Fraction(Decimal(str(impact))) + Fraction(Decimal(str(exploitability)))
    scaled = total * 10
    ceil = -(-scaled.numerator // scaled.denominator)
    return min(Decimal(ceil) / 10, Decimal("10.0"))


def grep_hits(root: Path, needles: list[str]) -> list[tuple[str, int, int, str]]:
    """Line-by-line text search; (rel_path, line, 1-based col, needle) sorted."""
    out = []
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        if path.name == "pom.xml":
            continue
        rel = path.relative_to(root).as_posix()
        for lineno, line in enumerate(path.read_bytes().split(b"\n"), start=1):
            for needle in needles:
                nb = needle.encode()
                start = line.find(nb)
                while start != -1:
                    out.append((rel, lineno, start + 1, needle))
                    start = line.find(nb, start + 1)
    return sorted(out)
