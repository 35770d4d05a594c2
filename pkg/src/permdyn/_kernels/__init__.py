"""Kernel backend selection: compiled Cython core with a pure-numpy fallback.

The compiled extension is used when importable; set PERMDYN_BACKEND=fallback
(or =compiled) to force a choice at import time.  Both backends implement the
same functions and share a bitwise-identical random-word protocol; sampled
values agree to <= 1e-12 relative (libm vs numpy ulp differences).
"""

import os

from . import _fallback

try:
    from . import _core
except ImportError:
    _core = None

_forced = os.environ.get("PERMDYN_BACKEND", "").strip().lower()
if _forced == "fallback":
    active = _fallback
elif _forced == "compiled":
    if _core is None:
        raise ImportError(
            "PERMDYN_BACKEND=compiled but the permdyn._kernels._core extension "
            "is not built; install with the Cython extension or unset the variable"
        )
    active = _core
elif _forced in ("", "auto"):
    active = _core if _core is not None else _fallback
else:
    raise ImportError(f"unknown PERMDYN_BACKEND value {_forced!r}")


def available_backends():
    names = ["fallback"]
    if _core is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name=None):
    """Return a kernel backend module: 'compiled', 'fallback', or None for the active one."""
    if name is None:
        return active
    if name == "compiled":
        if _core is None:
            raise ValueError("compiled kernel backend is not available")
        return _core
    if name == "fallback":
        return _fallback
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name():
    return active.NAME
