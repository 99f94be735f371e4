"""Prompt registry: registration, lifecycle states, lineage, usage, collections.

Prompt IDs are derived from (content CID, creator address, timestamp) so an
observer cannot front-run a pending registration and claim the same ID, and
the same content re-registered at a different second yields a distinct
prompt. Version numbers follow the fork chain: roots are version 1, a child
is its parent's version plus one.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    DuplicateRegistration,
    EmptyCollection,
    InvalidParent,
    NotFound,
    NotValidated,
    SchemaInvalid,
    Unauthorized,
    UnknownCid,
    WrongState,
)
from .journal import Journal
from .model import ParseError, PromptDocument, UsageSummary, ValidationSummary, parse_document
from .economy import Ledger
from .store import Cid, ContentStore
from .units import pct

MIN_STAKE = pct(100)
USAGE_FEE = pct("0.1")
COLLECTION_STAKE = pct(200)
PROMPT_ID_PREFIX = "pp1-"
COLLECTION_ID_PREFIX = "col1-"
TRENDING_WINDOW_SECONDS = 24 * 3600


class LifecycleState(str, Enum):
    REGISTERED = "registered"
    UNDER_VALIDATION = "under_validation"
    VALIDATED = "validated"
    DISPUTED = "disputed"
    DEPRECATED = "deprecated"


# Allowed transitions; deprecation is additionally reachable from any
# non-deprecated state by the creator.
TRANSITIONS: dict[LifecycleState, set[LifecycleState]] = {
    LifecycleState.REGISTERED: {LifecycleState.UNDER_VALIDATION, LifecycleState.DEPRECATED},
    LifecycleState.UNDER_VALIDATION: {LifecycleState.VALIDATED, LifecycleState.DISPUTED,
                                      LifecycleState.DEPRECATED},
    LifecycleState.VALIDATED: {LifecycleState.DISPUTED, LifecycleState.DEPRECATED},
    LifecycleState.DISPUTED: {LifecycleState.VALIDATED, LifecycleState.DEPRECATED},
    LifecycleState.DEPRECATED: set(),
}


def derive_prompt_id(cid: Cid, creator: str, timestamp: int) -> str:
    """Deterministic ID over (content digest, creator, timestamp)."""
    payload = cid.digest + bytes.fromhex(creator[2:]) + timestamp.to_bytes(8, "big")
    return PROMPT_ID_PREFIX + hashlib.sha256(payload).hexdigest()


@dataclass
class PromptRecord:
    prompt_id: str
    creator: str
    cid: Cid
    version: int
    parent_id: str | None
    timestamp: int
    state: LifecycleState = LifecycleState.REGISTERED
    stake: int = 0
    validation_score: int | None = None
    derivative_count: int = 0
    # Denormalized document fields for search and governance.
    domain: str = ""
    title: str = ""
    tags: list[str] = field(default_factory=list)
    # Usage accounting.
    total_uses: int = 0
    success_count: int = 0
    rating_sum: int = 0
    rating_count: int = 0
    epoch_uses: int = 0

    def usage_summary(self) -> UsageSummary:
        if self.total_uses:
            success_rate = round(100 * self.success_count / self.total_uses)
        else:
            success_rate = 100
        if self.rating_count:
            average_rating = round(self.rating_sum / self.rating_count)
        else:
            average_rating = self.validation_score or 0
        return UsageSummary(
            total_uses=self.total_uses,
            success_rate=success_rate,
            average_rating=average_rating,
            derivatives=self.derivative_count,
        )


@dataclass
class Collection:
    collection_id: str
    curator: str
    name: str
    members: list[str]
    created_at: int
    stake: int = 0


def _transition(record: PromptRecord, target: LifecycleState) -> None:
    if target not in TRANSITIONS[record.state]:
        raise WrongState(
            f"prompt {record.prompt_id} cannot move {record.state.value} -> {target.value}"
        )
    record.state = target


class Registry:
    def __init__(self, store: ContentStore, ledger: Ledger, journal: Journal):
        self.store = store
        self.ledger = ledger
        self.journal = journal
        self.records: dict[str, PromptRecord] = {}
        self.collections: dict[str, Collection] = {}
        self._registration_keys: set[tuple[str, str, int]] = set()
        self._by_domain: dict[str, list[str]] = {}
        self._by_creator: dict[str, list[str]] = {}
        self._usage_events: list[tuple[int, str]] = []

    # -- registration ------------------------------------------------------

    def register_prompt(self, creator: str, cid: Cid, parent_id: str | None, now: int) -> PromptRecord:
        self.ledger.require_balance(creator, MIN_STAKE, "register a prompt")
        if not self.store.contains(cid):
            raise UnknownCid(f"cid {cid.text} is not stored")
        try:
            doc = parse_document(self.store.get(cid))
        except ParseError as exc:
            raise SchemaInvalid(f"stored content is not a prompt document: {exc.message}") from None

        parent = None
        if parent_id is not None:
            parent = self.records.get(parent_id)
            if parent is None or parent.state is LifecycleState.DEPRECATED:
                raise InvalidParent(f"invalid parent {parent_id}")

        key = (cid.text, creator, now)
        if key in self._registration_keys:
            raise DuplicateRegistration(
                f"{creator} already registered {cid.text} at {now}"
            )

        prompt_id = derive_prompt_id(cid, creator, now)
        self.ledger.lock_stake(creator, MIN_STAKE, prompt_id, action="register a prompt")
        record = PromptRecord(
            prompt_id=prompt_id,
            creator=creator,
            cid=cid,
            version=1 if parent is None else parent.version + 1,
            parent_id=parent_id,
            timestamp=now,
            stake=MIN_STAKE,
            domain=doc.metadata.domain,
            title=doc.metadata.title,
            tags=list(doc.metadata.tags),
        )
        self.records[prompt_id] = record
        self._registration_keys.add(key)
        self._by_domain.setdefault(record.domain, []).append(prompt_id)
        self._by_creator.setdefault(creator, []).append(prompt_id)
        if parent is not None:
            parent.derivative_count += 1
        self.journal.append("prompt_registered", {
            "promptId": prompt_id,
            "creator": creator,
            "cid": cid.text,
            "parentId": parent_id,
            "version": record.version,
            "domain": record.domain,
        }, ts=now)
        return record

    # -- reads ---------------------------------------------------------------

    def get_prompt(self, prompt_id: str) -> PromptRecord:
        record = self.records.get(prompt_id)
        if record is None:
            raise NotFound(f"prompt {prompt_id} not found")
        return record

    def document(self, prompt_id: str) -> PromptDocument:
        record = self.get_prompt(prompt_id)
        doc = parse_document(self.store.get(record.cid))
        doc.usage_summary = record.usage_summary()
        if record.validation_score is not None:
            doc.validation_summary = ValidationSummary(score=record.validation_score)
        return doc

    def lineage(self, prompt_id: str) -> list[PromptRecord]:
        """Records from self back to the version-1 root."""
        record = self.get_prompt(prompt_id)
        chain = [record]
        while record.parent_id is not None:
            record = self.get_prompt(record.parent_id)
            chain.append(record)
        return chain

    # -- lifecycle -----------------------------------------------------------

    def mark_under_validation(self, prompt_id: str) -> None:
        record = self.get_prompt(prompt_id)
        if record.state is LifecycleState.REGISTERED:
            _transition(record, LifecycleState.UNDER_VALIDATION)
        elif record.state is not LifecycleState.UNDER_VALIDATION:
            raise WrongState(f"prompt {prompt_id} is {record.state.value}")

    def set_validated(self, prompt_id: str, score: int) -> None:
        """Finalization effect: score recorded, creator's stake released."""
        record = self.get_prompt(prompt_id)
        _transition(record, LifecycleState.VALIDATED)
        record.validation_score = score
        if record.stake:
            self.ledger.release_stake(record.creator, record.stake, prompt_id)
            record.stake = 0

    def set_disputed(self, prompt_id: str) -> None:
        _transition(self.get_prompt(prompt_id), LifecycleState.DISPUTED)

    def restore_validated(self, prompt_id: str) -> None:
        _transition(self.get_prompt(prompt_id), LifecycleState.VALIDATED)

    def deprecate(self, prompt_id: str, caller: str, now: int,
                  by_governance: bool = False, stake_slashed: bool = False) -> PromptRecord:
        record = self.get_prompt(prompt_id)
        if not by_governance and caller != record.creator:
            raise Unauthorized(f"{caller} is not the creator of {prompt_id}")
        _transition(record, LifecycleState.DEPRECATED)
        if record.stake and not stake_slashed:
            self.ledger.release_stake(record.creator, record.stake, prompt_id)
        record.stake = 0
        self.journal.append("prompt_deprecated", {
            "promptId": prompt_id,
            "caller": caller,
            "byGovernance": by_governance,
            "domain": record.domain,
        }, ts=now)
        return record

    # -- usage ----------------------------------------------------------------

    def record_usage(self, prompt_id: str, user: str, now: int,
                     success: bool = True, rating: int | None = None) -> UsageSummary:
        record = self.get_prompt(prompt_id)
        if record.state is not LifecycleState.VALIDATED:
            raise NotValidated(f"prompt {prompt_id} is {record.state.value}, not validated")
        self.ledger.pay_fee(user, USAGE_FEE, prompt_id, action="use a prompt")
        record.total_uses += 1
        record.epoch_uses += 1
        if success:
            record.success_count += 1
        if rating is not None:
            if not 0 <= rating <= 10:
                raise ValueError("rating must be in [0, 10]")
            record.rating_sum += rating
            record.rating_count += 1
        self._usage_events.append((now, prompt_id))
        self.journal.append("prompt_used", {
            "promptId": prompt_id,
            "user": user,
            "domain": record.domain,
            "success": success,
            "rating": rating,
        }, ts=now)
        return record.usage_summary()

    def drain_epoch_usage(self) -> dict[str, int]:
        """Per-prompt usage since the last epoch boundary; resets counters."""
        out = {}
        for record in self.records.values():
            if record.epoch_uses:
                out[record.prompt_id] = record.epoch_uses
                record.epoch_uses = 0
        return out

    # -- collections ------------------------------------------------------------

    def create_collection(self, curator: str, name: str, prompt_ids: list[str], now: int) -> Collection:
        if not prompt_ids:
            raise EmptyCollection("a collection needs at least one prompt")
        for pid in prompt_ids:
            record = self.get_prompt(pid)
            if record.state is LifecycleState.DEPRECATED:
                raise WrongState(f"prompt {pid} is deprecated")
        self.ledger.require_balance(curator, COLLECTION_STAKE, "create a collection")
        payload = hashlib.sha256(
            bytes.fromhex(curator[2:]) + name.encode("utf-8") + now.to_bytes(8, "big")
        ).hexdigest()
        collection_id = COLLECTION_ID_PREFIX + payload
        self.ledger.lock_stake(curator, COLLECTION_STAKE, collection_id,
                               action="create a collection")
        collection = Collection(collection_id=collection_id, curator=curator, name=name,
                                members=list(dict.fromkeys(prompt_ids)), created_at=now,
                                stake=COLLECTION_STAKE)
        self.collections[collection_id] = collection
        self.journal.append("collection_created", {
            "collectionId": collection_id,
            "curator": curator,
            "name": name,
            "promptIds": collection.members,
        }, ts=now)
        return collection

    def get_collection(self, collection_id: str) -> Collection:
        collection = self.collections.get(collection_id)
        if collection is None:
            raise NotFound(f"collection {collection_id} not found")
        return collection

    def update_collection(self, collection_id: str, caller: str,
                          add: list[str] = (), remove: list[str] = (), now: int = 0) -> Collection:
        collection = self.get_collection(collection_id)
        if caller != collection.curator:
            raise Unauthorized(f"{caller} is not the curator of {collection_id}")
        for pid in add:
            self.get_prompt(pid)  # must exist
        members = [m for m in collection.members if m not in set(remove)]
        members.extend(pid for pid in add if pid not in members)
        if not members:
            raise EmptyCollection("a collection needs at least one prompt")
        collection.members = members
        self.journal.append("collection_updated", {
            "collectionId": collection_id,
            "add": list(add),
            "remove": list(remove),
        }, ts=now)
        return collection

    # -- search and discovery ----------------------------------------------------

    def search(self, domain: str | None = None, min_score: int | None = None,
               creator: str | None = None, since: int | None = None,
               until: int | None = None, q: str | None = None,
               include_deprecated: bool = False,
               limit: int = 20, cursor: str | None = None) -> tuple[list[PromptRecord], str | None]:
        if domain is not None:
            candidates = [self.records[p] for p in self._by_domain.get(domain, [])]
        elif creator is not None:
            candidates = [self.records[p] for p in self._by_creator.get(creator, [])]
        else:
            candidates = list(self.records.values())

        needle = q.lower() if q else None
        out = []
        for record in candidates:
            if not include_deprecated and record.state is LifecycleState.DEPRECATED:
                continue
            if creator is not None and record.creator != creator:
                continue
            if min_score is not None and (record.validation_score is None
                                          or record.validation_score < min_score):
                continue
            if since is not None and record.timestamp < since:
                continue
            if until is not None and record.timestamp > until:
                continue
            if needle is not None:
                haystack = record.title.lower()
                if needle not in haystack and not any(needle in t.lower() for t in record.tags):
                    continue
            out.append(record)
        return _paginate(out, limit, cursor)

    def recent(self, limit: int = 20, cursor: str | None = None) -> tuple[list[PromptRecord], str | None]:
        live = [r for r in self.records.values() if r.state is not LifecycleState.DEPRECATED]
        return _paginate(live, limit, cursor)

    def trending(self, now: int, limit: int = 20,
                 window: int = TRENDING_WINDOW_SECONDS) -> list[tuple[PromptRecord, int]]:
        """Live prompts ranked by usage inside the trailing window."""
        floor = now - window
        counts: dict[str, int] = {}
        for ts, pid in reversed(self._usage_events):
            if ts < floor:
                break
            counts[pid] = counts.get(pid, 0) + 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        out = []
        for pid, n in ranked:
            record = self.records[pid]
            if record.state is LifecycleState.DEPRECATED:
                continue
            out.append((record, n))
            if len(out) >= limit:
                break
        return out

    def prompts_by_creator(self, creator: str) -> list[PromptRecord]:
        return [self.records[p] for p in self._by_creator.get(creator, [])]

    def validated_scores_by_creator(self, creator: str) -> list[int]:
        return [r.validation_score for r in self.prompts_by_creator(creator)
                if r.state is LifecycleState.VALIDATED and r.validation_score is not None]


def _sort_key(record: PromptRecord) -> tuple[int, str]:
    return (-record.timestamp, record.prompt_id)


def _encode_cursor(record: PromptRecord) -> str:
    raw = json.dumps([record.timestamp, record.prompt_id]).encode()
    return base64.urlsafe_b64encode(raw).decode()


def _decode_cursor(cursor: str) -> tuple[int, str]:
    ts, pid = json.loads(base64.urlsafe_b64decode(cursor.encode()))
    return (-int(ts), str(pid))


def _paginate(records: list[PromptRecord], limit: int,
              cursor: str | None) -> tuple[list[PromptRecord], str | None]:
    """Cursor pagination over (newest-first, id) order.

    The cursor pins the last-seen sort key, so rows inserted after page one
    was served can never duplicate or displace rows on later pages.
    """
    ordered = sorted(records, key=_sort_key)
    if cursor is not None:
        floor = _decode_cursor(cursor)
        ordered = [r for r in ordered if _sort_key(r) > floor]
    page = ordered[:max(limit, 0)]
    next_cursor = _encode_cursor(page[-1]) if len(ordered) > len(page) and page else None
    return page, next_cursor
