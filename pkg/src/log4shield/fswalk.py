"""Deterministic directory walking shared by the manifest and deep scans."""

from __future__ import annotations

import fnmatch
import os
from collections.abc import Iterable, Iterator
from pathlib import Path

IGNORE_FILE = ".log4shieldignore"
DEFAULT_IGNORED_DIRS = frozenset({".git", "target", "build", "node_modules", ".idea"})


class NoSuchPath(FileNotFoundError):
    pass


def path_key(rel: str) -> tuple[str, ...]:
    """Sort key for a relative POSIX path: component-wise lexicographic."""
    return tuple(rel.split("/"))


def load_ignore_file(root: str | os.PathLike) -> list[str]:
    """Glob patterns from ``.log4shieldignore`` at the scan root, if present."""
    path = Path(root) / IGNORE_FILE
    try:
        lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
    except OSError:
        return []
    patterns = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            patterns.append(line.rstrip("/"))
    return patterns


def ignored(rel: str, patterns: Iterable[str]) -> bool:
    """Match ``rel`` against gitignore-flavoured globs.

    A pattern without ``/`` is tried against the final path component, one
    with ``/`` against the whole relative path (a leading ``/`` anchors it).
    """
    name = rel.rsplit("/", 1)[-1]
    for pat in patterns:
        if "/" in pat:
            if fnmatch.fnmatchcase(rel, pat.lstrip("/")):
                return True
        elif fnmatch.fnmatchcase(name, pat):
            return True
    return False


def walk_files(
    root: str | os.PathLike,
    ignored_dirs: Iterable[str] = DEFAULT_IGNORED_DIRS,
    ignore_patterns: Iterable[str] = (),
) -> Iterator[tuple[str, Path]]:
    """Yield ``(relative_posix_path, absolute_path)`` for regular files under root.

    Pruned: directories named in ``ignored_dirs`` and anything matching
    ``ignore_patterns``. Symlinks are not followed. Output order is
    depth-first with lexicographically sorted entries.
    """
    root = Path(root)
    if not root.is_dir():
        raise NoSuchPath(f"no such directory: {root}")
    ignored_dirs = frozenset(ignored_dirs)
    patterns = list(ignore_patterns)
    results = []
    for dirpath, dirnames, filenames in os.walk(root):
        base = Path(dirpath)
        rel_base = base.relative_to(root).as_posix()
        prefix = "" if rel_base == "." else rel_base + "/"
        keep = []
        for d in sorted(dirnames):
            if d in ignored_dirs or ignored(prefix + d, patterns):
                continue
            keep.append(d)
        dirnames[:] = keep
        for f in filenames:
            rel = prefix + f
            full = base / f
            if full.is_symlink() or not full.is_file() or ignored(rel, patterns):
                continue
            results.append((rel, full))
    results.sort(key=lambda item: path_key(item[0]))
    return iter(results)
