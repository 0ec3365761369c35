"""Kernel selection: use the compiled extension when it was built, fall back
to the pure-Python implementations otherwise.

Set ``TEXTCF_PURE_PYTHON=1`` to force the fallback (used by the equivalence
tests and the benchmark).
"""

from __future__ import annotations

import os
from array import array

from textcf import _kernels_py

if os.environ.get("TEXTCF_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from textcf import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND


def as_int_array(values) -> array:
    """Pack an int sequence into the buffer type both backends accept."""
    return array("i", values)


def lev_distance(a: array, b: array) -> int:
    return _impl.lev_distance(a, b)


def tree_distance(labels_a, lmds_a, keyroots_a, labels_b, lmds_b, keyroots_b) -> int:
    return _impl.tree_distance(labels_a, lmds_a, keyroots_a, labels_b, lmds_b, keyroots_b)
