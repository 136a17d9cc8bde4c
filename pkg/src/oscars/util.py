"""Shared plumbing: content hashing, atomic file writes, bounded parallelism."""

from __future__ import annotations

import hashlib
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

THREADS_ENV = "OSCARS_THREADS"


def checksum64(data: bytes) -> bytes:
    """8-byte content hash used in binary trailers and manifests."""
    return hashlib.blake2b(data, digest_size=8).digest()


def checksum64_hex(data: bytes) -> str:
    return checksum64(data).hex()


def file_checksum_hex(path: str | os.PathLike) -> str:
    return checksum64_hex(Path(path).read_bytes())


def stable_hash64(text: str) -> int:
    """Deterministic 64-bit hash of a string (unlike builtin hash, not salted)."""
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write-to-temp then rename, so failures never leave partial outputs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        # mkstemp files are 0600; give the output normal umask-driven permissions
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def thread_count() -> int:
    """Parallelism cap from the environment; 1 (sequential) when unset."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items):
    """Map preserving input order; threads only when OSCARS_THREADS > 1.

    Every fn call is independent and pure, so the merge is deterministic
    regardless of scheduling.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
