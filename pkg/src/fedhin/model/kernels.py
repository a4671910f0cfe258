"""Kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set ``FEDHIN_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and the equivalence tests).
"""

from __future__ import annotations

import os

from . import node_kernel_py

if os.environ.get("FEDHIN_PURE_PYTHON") == "1":
    _impl = node_kernel_py
else:
    try:
        from . import _node_kernel as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = node_kernel_py

BACKEND = "compiled" if _impl is not node_kernel_py else "python"

node_forward = _impl.node_forward
node_backward = _impl.node_backward
