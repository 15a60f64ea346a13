"""Pure-Python multi-needle search, used when the compiled kernel is absent."""

from __future__ import annotations

from bisect import bisect_right


def find_all(data: bytes, needles: tuple[bytes, ...]) -> list[tuple[int, int, int]]:
    """Return ``(needle_index, line, column)`` for every occurrence of every needle.

    Lines and columns are 1-based; the column is the byte offset within the
    line. Overlapping occurrences are all reported. Output is sorted by
    ``(line, column, needle_index)``.
    """
    offsets: list[tuple[int, int]] = []
    for idx, needle in enumerate(needles):
        if not needle:
            continue
        pos = data.find(needle)
        while pos != -1:
            offsets.append((pos, idx))
            pos = data.find(needle, pos + 1)
    if not offsets:
        return []
    newlines = []
    pos = data.find(b"\n")
    while pos != -1:
        newlines.append(pos)
        pos = data.find(b"\n", pos + 1)
    out = []
    for pos, idx in offsets:
        n = bisect_right(newlines, pos)
        line_start = newlines[n - 1] + 1 if n else 0
        out.append((idx, n + 1, pos - line_start + 1))
    out.sort(key=lambda t: (t[1], t[2], t[0]))
    return out
