"""Content-addressed storage with dedup, DAG links, pinning, and GC.

Objects are addressed by a SHA-256 CID ("pc1-" + 64 hex chars). Payloads
are split with a content-defined rolling-hash chunker so that documents
sharing long common runs (system instruction blocks, example banks) share
physical chunks; logical vs physical byte accounting exposes the dedup
ratio. Backends are pluggable; pinning replicates an object onto up to N
distinct backends and shields it (and everything it links to) from GC.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IntegrityViolation, LinkUnresolvable, NoBackends, NotFound

CID_PREFIX = "pc1-"

# Gear table for the rolling hash; fixed seed keeps chunk boundaries
# (and therefore physical layout) identical across processes.
_GEAR = random.Random(0x9E3779B9).choices(range(1 << 64), k=256)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Cid:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("cid digest must be 32 bytes")

    @property
    def text(self) -> str:
        return CID_PREFIX + self.digest.hex()

    def __str__(self) -> str:
        return self.text

    @classmethod
    def parse(cls, text: str) -> "Cid":
        if not text.startswith(CID_PREFIX) or len(text) != len(CID_PREFIX) + 64:
            raise ValueError(f"malformed cid: {text!r}")
        return cls(bytes.fromhex(text[len(CID_PREFIX):]))


def compute_cid(data: bytes) -> Cid:
    return Cid(hashlib.sha256(data).digest())


def chunk_bytes(data: bytes, min_size: int = 64, avg_size: int = 256, max_size: int = 1024) -> list[bytes]:
    """Content-defined chunking: boundaries re-sync after local edits."""
    if not data:
        return []
    mask = avg_size - 1  # avg_size must be a power of two
    chunks = []
    start = 0
    h = 0
    i = 0
    n = len(data)
    while i < n:
        h = ((h << 1) + _GEAR[data[i]]) & _MASK64
        i += 1
        size = i - start
        if (size >= min_size and (h & mask) == mask) or size >= max_size:
            chunks.append(data[start:i])
            start = i
            h = 0
    if start < n:
        chunks.append(data[start:])
    return chunks


@dataclass
class StoredObject:
    cid: Cid
    size: int
    links: list[Cid]
    chunk_ids: list[str]
    pin_count: int = 0
    created_at: int = 0


@dataclass
class PinReceipt:
    cid: Cid
    replication_factor: int
    providers: list[str]
    owner: str | None = None


@dataclass
class StoreStats:
    logical_bytes: int
    physical_bytes: int
    object_count: int

    @property
    def dedup_ratio(self) -> float:
        if self.physical_bytes == 0:
            return 1.0
        return self.logical_bytes / self.physical_bytes


class MemoryBackend:
    """In-memory backend; also the base interface all backends implement."""

    def __init__(self, backend_id: str = "mem-0"):
        self.backend_id = backend_id
        self._chunks: dict[str, bytes] = {}
        self._manifests: dict[str, dict] = {}

    def put_chunk(self, chunk_id: str, data: bytes) -> None:
        self._chunks[chunk_id] = data

    def get_chunk(self, chunk_id: str) -> bytes | None:
        return self._chunks.get(chunk_id)

    def delete_chunk(self, chunk_id: str) -> None:
        self._chunks.pop(chunk_id, None)

    def put_manifest(self, cid_text: str, manifest: dict) -> None:
        self._manifests[cid_text] = manifest

    def get_manifest(self, cid_text: str) -> dict | None:
        return self._manifests.get(cid_text)

    def delete_manifest(self, cid_text: str) -> None:
        self._manifests.pop(cid_text, None)

    def list_manifests(self) -> list[str]:
        return list(self._manifests)


class DirectoryBackend(MemoryBackend):
    """One manifest file per object named by CID, chunk files alongside.

    objects/<cid>.json holds {size, links, chunks, pins, created}; this is
    both the object record and the link-index sidecar. chunks/<sha256> hold
    raw chunk bytes shared between objects.
    """

    def __init__(self, root: str | Path, backend_id: str | None = None):
        self.root = Path(root)
        super().__init__(backend_id or f"dir-{self.root.name}")
        (self.root / "objects").mkdir(parents=True, exist_ok=True)
        (self.root / "chunks").mkdir(parents=True, exist_ok=True)
        for mf in sorted((self.root / "objects").glob("*.json")):
            self._manifests[mf.stem] = json.loads(mf.read_text())
        for cf in (self.root / "chunks").iterdir():
            self._chunks[cf.name] = cf.read_bytes()

    def put_chunk(self, chunk_id: str, data: bytes) -> None:
        super().put_chunk(chunk_id, data)
        path = self.root / "chunks" / chunk_id
        if not path.exists():
            path.write_bytes(data)

    def delete_chunk(self, chunk_id: str) -> None:
        super().delete_chunk(chunk_id)
        (self.root / "chunks" / chunk_id).unlink(missing_ok=True)

    def put_manifest(self, cid_text: str, manifest: dict) -> None:
        super().put_manifest(cid_text, manifest)
        (self.root / "objects" / f"{cid_text}.json").write_text(
            json.dumps(manifest, sort_keys=True)
        )

    def delete_manifest(self, cid_text: str) -> None:
        super().delete_manifest(cid_text)
        (self.root / "objects" / f"{cid_text}.json").unlink(missing_ok=True)


class ContentStore:
    """Deduplicating object store over one primary and N replica backends."""

    def __init__(self, backends: list | None = None):
        self.backends = backends if backends is not None else [MemoryBackend()]
        self._objects: dict[str, StoredObject] = {}
        self._chunk_refs: dict[str, int] = {}
        self._chunk_sizes: dict[str, int] = {}
        self._pins: dict[str, PinReceipt] = {}
        self._lock = threading.RLock()
        if self.backends:
            self._load_from_primary()

    @property
    def _primary(self):
        if not self.backends:
            raise NoBackends("store has no backends attached")
        return self.backends[0]

    def _load_from_primary(self) -> None:
        primary = self.backends[0]
        for cid_text in sorted(primary.list_manifests()):
            m = primary.get_manifest(cid_text)
            obj = StoredObject(
                cid=Cid.parse(cid_text),
                size=m["size"],
                links=[Cid.parse(x) for x in m["links"]],
                chunk_ids=list(m["chunks"]),
                pin_count=m.get("pins", 0),
                created_at=m.get("created", 0),
            )
            self._objects[cid_text] = obj
            for cid_chunk in obj.chunk_ids:
                self._chunk_refs[cid_chunk] = self._chunk_refs.get(cid_chunk, 0) + 1
                data = primary.get_chunk(cid_chunk)
                if data is not None:
                    self._chunk_sizes[cid_chunk] = len(data)

    def contains(self, cid: Cid) -> bool:
        return cid.text in self._objects

    def object_info(self, cid: Cid) -> StoredObject:
        obj = self._objects.get(cid.text)
        if obj is None:
            raise NotFound(f"object {cid.text} not in store")
        return obj

    def put(self, data: bytes, links: tuple[Cid, ...] | list[Cid] = (),
            allow_external_links: bool = False, now: int = 0) -> Cid:
        """Store bytes; idempotent for identical content."""
        cid = compute_cid(data)
        with self._lock:
            if cid.text in self._objects:
                return cid
            for link in links:
                if not allow_external_links and link.text not in self._objects:
                    raise LinkUnresolvable(f"link target {link.text} not in store")
            chunk_ids = []
            for chunk in chunk_bytes(data):
                cidc = hashlib.sha256(chunk).hexdigest()
                chunk_ids.append(cidc)
                self._chunk_refs[cidc] = self._chunk_refs.get(cidc, 0) + 1
                if self._chunk_refs[cidc] == 1:
                    self._chunk_sizes[cidc] = len(chunk)
                    self._primary.put_chunk(cidc, chunk)
            obj = StoredObject(cid=cid, size=len(data), links=list(links),
                               chunk_ids=chunk_ids, created_at=now)
            self._objects[cid.text] = obj
            self._write_manifest(self._primary, obj)
            return cid

    def _write_manifest(self, backend, obj: StoredObject) -> None:
        backend.put_manifest(obj.cid.text, {
            "size": obj.size,
            "links": [x.text for x in obj.links],
            "chunks": obj.chunk_ids,
            "pins": obj.pin_count,
            "created": obj.created_at,
        })

    def get(self, cid: Cid) -> bytes:
        """Retrieve and re-verify; tampered chunks surface as IntegrityViolation."""
        with self._lock:
            obj = self._objects.get(cid.text)
            if obj is None:
                raise NotFound(f"object {cid.text} not in store")
            parts = []
            for chunk_id in obj.chunk_ids:
                data = None
                for backend in self.backends:
                    data = backend.get_chunk(chunk_id)
                    if data is not None:
                        break
                if data is None:
                    raise IntegrityViolation(f"chunk {chunk_id} of {cid.text} missing")
                parts.append(data)
        payload = b"".join(parts)
        if compute_cid(payload) != cid:
            raise IntegrityViolation(f"stored bytes for {cid.text} fail digest re-check")
        return payload

    def pin(self, cid: Cid, replication_factor: int, owner: str | None = None) -> PinReceipt:
        if replication_factor < 1:
            raise ValueError("replication_factor must be >= 1")
        with self._lock:
            if not self.backends:
                raise NoBackends("no backends available for pinning")
            obj = self._objects.get(cid.text)
            if obj is None:
                raise NotFound(f"object {cid.text} not in store")
            chosen = self.backends[: min(replication_factor, len(self.backends))]
            for backend in chosen:
                for chunk_id in obj.chunk_ids:
                    if backend.get_chunk(chunk_id) is None:
                        backend.put_chunk(chunk_id, self._primary.get_chunk(chunk_id))
                if backend.get_manifest(cid.text) is None:
                    self._write_manifest(backend, obj)
            obj.pin_count += 1
            self._write_manifest(self._primary, obj)
            receipt = PinReceipt(cid=cid, replication_factor=replication_factor,
                                 providers=[b.backend_id for b in chosen], owner=owner)
            self._pins[cid.text] = receipt
            return receipt

    def unpin(self, cid: Cid) -> None:
        with self._lock:
            obj = self._objects.get(cid.text)
            if obj is None:
                raise NotFound(f"object {cid.text} not in store")
            if obj.pin_count > 0:
                obj.pin_count -= 1
                self._write_manifest(self._primary, obj)
            if obj.pin_count == 0:
                self._pins.pop(cid.text, None)

    def active_pins(self) -> list[PinReceipt]:
        return list(self._pins.values())

    def downgrade_pin(self, cid: Cid) -> None:
        """Drop a pin's paid replication back to a single provider."""
        with self._lock:
            receipt = self._pins.get(cid.text)
            if receipt is not None:
                receipt.replication_factor = 1
                receipt.providers = receipt.providers[:1]

    def gc(self) -> list[Cid]:
        """Remove unpinned objects not reachable via links from a pinned one."""
        with self._lock:
            keep: set[str] = set()
            frontier = [t for t, o in self._objects.items() if o.pin_count > 0]
            while frontier:
                text = frontier.pop()
                if text in keep:
                    continue
                keep.add(text)
                obj = self._objects.get(text)
                if obj is None:
                    continue
                frontier.extend(l.text for l in obj.links if l.text not in keep)
            removed = []
            for text in [t for t in self._objects if t not in keep]:
                obj = self._objects.pop(text)
                removed.append(obj.cid)
                for backend in self.backends:
                    backend.delete_manifest(text)
                for chunk_id in obj.chunk_ids:
                    self._chunk_refs[chunk_id] -= 1
                    if self._chunk_refs[chunk_id] == 0:
                        del self._chunk_refs[chunk_id]
                        del self._chunk_sizes[chunk_id]
                        for backend in self.backends:
                            backend.delete_chunk(chunk_id)
            return removed

    def stats(self) -> StoreStats:
        with self._lock:
            logical = sum(o.size for o in self._objects.values())
            physical = sum(self._chunk_sizes.values())
            return StoreStats(logical_bytes=logical, physical_bytes=physical,
                              object_count=len(self._objects))
