"""Small file helpers shared by the CSV/JSON writers."""

from __future__ import annotations

import contextlib


@contextlib.contextmanager
def text_sink(target):
    """Yield a writable text handle: ``target`` itself if it has ``write``, else the opened path."""
    if hasattr(target, "write"):
        yield target
        return
    with open(target, "w", newline="") as fh:
        yield fh
