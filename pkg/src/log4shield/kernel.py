"""Select the substring-search kernel.

The Cython build is preferred; set ``LOG4SHIELD_PURE_PYTHON=1`` to force the
pure-Python fallback (both produce identical output).
"""

from __future__ import annotations

import os

from . import _kernel_py

find_all_py = _kernel_py.find_all

try:
    from ._kernel import find_all as find_all_compiled
except ImportError:
    find_all_compiled = None

if find_all_compiled is not None and not os.environ.get("LOG4SHIELD_PURE_PYTHON"):
    find_all = find_all_compiled
    BACKEND = "cython"
else:
    find_all = find_all_py
    BACKEND = "python"

__all__ = ["find_all", "find_all_py", "find_all_compiled", "BACKEND"]
