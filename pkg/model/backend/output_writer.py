"""
This module writes output files atomically.

Callers render every output to text first and hand the full mapping to
write_outputs. Every file is written to a temporary sibling before any of them
is renamed into place, so a failed write leaves no outputs and no temporaries.
"""

import os
import tempfile
from pathlib import Path


def _stage(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
    except BaseException:
        _discard([temporary])
        raise
    return temporary


def _discard(temporaries):
    for temporary in temporaries:
        if os.path.exists(temporary):
            os.unlink(temporary)


def write_outputs(outputs):
    """
    Writes a mapping of path -> text as one set.

    All texts are staged as temporary files first, then renamed in mapping
    order. A failure while staging leaves every target untouched; a failed
    rename removes the temporaries that were not renamed yet.

    Returns:
        list[Path]: The written paths, in mapping order.
    """
    paths = [Path(path) for path in outputs]
    staged = []
    try:
        for path, text in zip(paths, outputs.values()):
            staged.append(_stage(path, text))
        for index, (temporary, path) in enumerate(zip(staged, paths)):
            os.replace(temporary, path)
            staged[index] = None
    except BaseException:
        _discard([temporary for temporary in staged if temporary is not None])
        raise
    return paths
