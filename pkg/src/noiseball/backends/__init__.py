"""Backend selection: compiled extension if available, numpy fallback.

``NOISEBALL_BACKEND=pure`` or ``NOISEBALL_BACKEND=compiled`` forces a
choice; the default prefers the compiled kernels.  Both backends consume
identical RNG streams and (for the polynomial-gradient families) produce
bit-identical trajectories.
"""

from __future__ import annotations

import os

from . import pure


def _load(name: str):
    if name == "pure":
        return pure
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r} (expected 'pure' or 'compiled')")


_forced = os.environ.get("NOISEBALL_BACKEND")
if _forced:
    _impl = _load(_forced)
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = _impl.NAME
linreg_chunk = _impl.linreg_chunk
quartic_chunk = _impl.quartic_chunk
logistic_chunk = _impl.logistic_chunk


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: the active one)."""
    return _impl if name is None else _load(name)
