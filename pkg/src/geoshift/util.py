"""Small shared helpers: seed derivation, atomic file writes, CSV floats."""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

_SEED_MASK = (1 << 63) - 1


def child_seed(seed: int, label: str) -> int:
    """Derive a stable per-stage seed from the run seed and a stage label.

    Uses sha256 so the mapping is identical across platforms and sessions;
    adding a new stage never perturbs the seeds of existing ones.
    """
    digest = hashlib.sha256(f"{seed}\x1f{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & _SEED_MASK


def atomic_write_text(path: Path, text: str) -> None:
    """Write text to `path` via a temp file + rename, never a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_float(x: float) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(x))
