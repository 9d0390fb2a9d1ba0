"""File-backed document store: one directory per collection, one file per
(id, version), atomic write-temp-then-rename persistence.

After any interrupted write a document is either absent or a full old/new
version; readers never observe a torn file.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote, unquote

from .errors import NotFound, VersionConflict

COLLECTIONS = ("fragments", "catalogs", "sessions", "rulepacks")

# Crockford base32, used for ULID-style sortable ids.
_B32 = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def mint_id(now_ms: int | None = None, randomness: bytes | None = None) -> str:
    """26-char ULID: 48-bit millisecond timestamp + 80 random bits."""
    if now_ms is None:
        now_ms = int(time.time() * 1000)
    if randomness is None:
        randomness = os.urandom(10)
    value = (now_ms & ((1 << 48) - 1)) << 80 | int.from_bytes(randomness, "big")
    chars = []
    for i in range(26):
        chars.append(_B32[(value >> (125 - 5 * i)) & 0x1F])
    return "".join(chars)


@dataclass(frozen=True)
class StoredDocument:
    collection: str
    id: str
    version: int
    body: bytes
    updated_at: float


def _safe(name: str) -> str:
    return quote(name, safe="")


class DocumentStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        for collection in COLLECTIONS:
            (self.root / collection).mkdir(parents=True, exist_ok=True)

    def _path(self, collection: str, doc_id: str, version: int) -> Path:
        return self.root / collection / f"{_safe(doc_id)}__v{version}.json"

    def persist(self, collection: str, doc_id: str, version: int, body: bytes, *, overwrite: bool = False) -> StoredDocument:
        """Atomic durable write.  Immutable collections refuse to replace an
        existing version with different bytes; sessions pass overwrite=True."""
        if collection not in COLLECTIONS:
            raise NotFound(f"unknown collection {collection!r}")
        path = self._path(collection, doc_id, version)
        if path.exists() and not overwrite:
            if path.read_bytes() != body:
                raise VersionConflict(f"{collection}/{doc_id} v{version} already exists")
            return StoredDocument(collection, doc_id, version, body, path.stat().st_mtime)
        tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
        with open(tmp, "wb") as fh:
            fh.write(body)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
        return StoredDocument(collection, doc_id, version, body, path.stat().st_mtime)

    def versions(self, collection: str, doc_id: str) -> list[int]:
        prefix = f"{_safe(doc_id)}__v"
        out = []
        for path in (self.root / collection).glob(f"{prefix}*.json"):
            suffix = path.name[len(prefix):-len(".json")]
            if suffix.isdigit():
                out.append(int(suffix))
        return sorted(out)

    def fetch(self, collection: str, doc_id: str, version: int | None = None) -> StoredDocument:
        if version is None:
            versions = self.versions(collection, doc_id)
            if not versions:
                raise NotFound(f"{collection}/{doc_id} not found")
            version = versions[-1]
        path = self._path(collection, doc_id, version)
        if not path.exists():
            raise NotFound(f"{collection}/{doc_id} v{version} not found")
        return StoredDocument(collection, doc_id, version, path.read_bytes(), path.stat().st_mtime)

    def list_ids(self, collection: str) -> list[str]:
        ids = set()
        for path in (self.root / collection).glob("*.json"):
            name = path.name[:-len(".json")]
            doc_id, _, _ = name.rpartition("__v")
            if doc_id:
                ids.add(unquote(doc_id))
        return sorted(ids)
