"""Append-only event journal.

Every state mutation lands here as one entry with a monotonic sequence
number. Replaying the journal from genesis rebuilds the node bit-for-bit;
the API layer uses it for cache invalidation and subscription streams.
On disk the journal is newline-delimited JSON with sorted keys, so equal
histories produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class JournalEntry:
    seq: int
    ts: int
    event: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "event": self.event, "payload": self.payload},
            sort_keys=True, separators=(",", ":"), ensure_ascii=False,
        )


class Journal:
    def __init__(self):
        self.entries: list[JournalEntry] = []

    def append(self, event: str, payload: dict, ts: int) -> JournalEntry:
        entry = JournalEntry(seq=len(self.entries), ts=ts, event=event, payload=payload)
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def entries_since(self, seq: int) -> list[JournalEntry]:
        """All entries with sequence number >= seq, in order."""
        if seq <= 0:
            return list(self.entries)
        return self.entries[seq:]

    def to_bytes(self) -> bytes:
        return "".join(e.to_json() + "\n" for e in self.entries).encode("utf-8")

    def write(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def read(cls, path: str | Path) -> "Journal":
        journal = cls()
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            journal.entries.append(JournalEntry(
                seq=raw["seq"], ts=raw["ts"], event=raw["event"], payload=raw["payload"],
            ))
        return journal
