"""Kernel selection: compiled extension when available, pure Python otherwise.

Set SMDLAB_BACKEND=python or SMDLAB_BACKEND=cython to force a choice; the
default ("auto") prefers the extension.  Forcing cython without a built
extension is an error rather than a silent fallback.
"""

from __future__ import annotations

import os

from . import _loop
from .errors import ConfigurationError

try:
    from . import _speed as _ext
except ImportError:  # extension not built; pure-Python fallback
    _ext = None


def available_backends():
    names = ["python"]
    if _ext is not None:
        names.insert(0, "cython")
    return tuple(names)


def active_backend() -> str:
    forced = os.environ.get("SMDLAB_BACKEND", "auto")
    if forced == "python":
        return "python"
    if forced == "cython":
        if _ext is None:
            raise ConfigurationError("SMDLAB_BACKEND=cython but _speed is not built")
        return "cython"
    if forced != "auto":
        raise ConfigurationError(f"unknown SMDLAB_BACKEND {forced!r}")
    return "cython" if _ext is not None else "python"


def run_loop(*args, backend: str | None = None):
    name = backend or active_backend()
    if name == "python":
        return _loop.run_loop(*args)
    if name == "cython":
        if _ext is None:
            raise ConfigurationError("cython backend requested but not built")
        return _ext.run_loop(*args)
    raise ConfigurationError(f"unknown backend {name!r}")
