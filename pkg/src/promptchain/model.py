"""Prompt document schema, validation rules, and canonical serialization.

The document wire format keeps the published field names (promptId,
content.system, metadata.targetModels, ...). Canonical bytes cover only the
author-controlled sections (content, metadata, provenance) in fixed schema
order with no insignificant whitespace, so the same document always hashes
to the same CID no matter who serializes it. Server-populated sections
(validation, usage) and the registry-side promptId/version fields are
excluded: validation activity must never change a prompt's content address.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ParseError, SchemaInvalid

OUTPUT_FORMATS = ("json", "text", "markdown")
ADDRESS_RE = re.compile(r"^0x[0-9a-f]{40}$")
PROMPT_ID_RE = re.compile(r"^pp1-[0-9a-f]{64}$")


@dataclass
class Example:
    input: str
    output: str


@dataclass
class TargetModel:
    provider: str
    model: str
    version: str
    performance: int  # success rate, 0-100


@dataclass
class PromptContent:
    system: str
    user: str
    examples: list[Example] = field(default_factory=list)
    temperature: float = 0.7
    max_tokens: int = 1024


@dataclass
class PromptMetadata:
    title: str
    description: str = ""
    domain: str = ""
    subdomain: list[str] = field(default_factory=list)
    target_models: list[TargetModel] = field(default_factory=list)
    output_format: str = "text"
    language: str = "en"
    tags: list[str] = field(default_factory=list)
    difficulty: int = 0  # 0-10
    estimated_tokens: int = 0


@dataclass
class Contributor:
    address: str
    contribution: str
    timestamp: int


@dataclass
class Provenance:
    creator: str
    timestamp: int
    parent_prompt_id: str | None = None
    contributors: list[Contributor] = field(default_factory=list)
    license: str = "CC-BY-4.0"


@dataclass
class ValidationSummary:
    score: int = 0  # 0-10
    domain_expert_count: int = 0
    general_user_count: int = 0


@dataclass
class UsageSummary:
    total_uses: int = 0
    success_rate: int = 100  # 0-100
    average_rating: int = 0  # 0-10
    derivatives: int = 0


@dataclass
class PromptDocument:
    content: PromptContent
    metadata: PromptMetadata
    provenance: Provenance
    validation_summary: ValidationSummary | None = None
    usage_summary: UsageSummary | None = None


@dataclass
class SchemaViolation:
    field: str
    constraint: str


@dataclass
class SchemaReport:
    violations: list[SchemaViolation]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_schema(doc: PromptDocument) -> SchemaReport:
    """Check every field bound; violations are values, not exceptions."""
    v: list[SchemaViolation] = []

    c = doc.content
    if not c.user:
        v.append(SchemaViolation("content.user", "non-empty"))
    for i, ex in enumerate(c.examples):
        if not ex.input:
            v.append(SchemaViolation(f"content.examples[{i}].input", "non-empty"))
        if not ex.output:
            v.append(SchemaViolation(f"content.examples[{i}].output", "non-empty"))
    if not 0.0 <= c.temperature <= 2.0:
        v.append(SchemaViolation("content.temperature", "0-2"))
    if c.max_tokens < 0:
        v.append(SchemaViolation("content.maxTokens", "non-negative"))

    m = doc.metadata
    if not m.title:
        v.append(SchemaViolation("metadata.title", "non-empty"))
    if not m.domain:
        v.append(SchemaViolation("metadata.domain", "non-empty"))
    for i, tm in enumerate(m.target_models):
        if not 0 <= tm.performance <= 100:
            v.append(SchemaViolation(f"metadata.targetModels[{i}].performance", "0-100"))
    if m.output_format not in OUTPUT_FORMATS:
        v.append(SchemaViolation("metadata.outputFormat", "one of json/text/markdown"))
    if not 0 <= m.difficulty <= 10:
        v.append(SchemaViolation("metadata.difficulty", "0-10"))
    if m.estimated_tokens < 0:
        v.append(SchemaViolation("metadata.estimatedTokens", "non-negative"))

    p = doc.provenance
    if not ADDRESS_RE.match(p.creator):
        v.append(SchemaViolation("provenance.creator", "valid 0x address"))
    if p.timestamp < 0:
        v.append(SchemaViolation("provenance.timestamp", "non-negative"))
    if p.parent_prompt_id is not None and not PROMPT_ID_RE.match(p.parent_prompt_id):
        v.append(SchemaViolation("provenance.parentPromptId", "valid prompt id"))
    last_ts = None
    for i, contrib in enumerate(p.contributors):
        if not ADDRESS_RE.match(contrib.address):
            v.append(SchemaViolation(f"provenance.contributors[{i}].address", "valid 0x address"))
        if last_ts is not None and contrib.timestamp < last_ts:
            v.append(SchemaViolation(f"provenance.contributors[{i}].timestamp", "non-decreasing"))
        last_ts = contrib.timestamp

    if doc.validation_summary is not None:
        s = doc.validation_summary
        if not 0 <= s.score <= 10:
            v.append(SchemaViolation("validation.score", "0-10"))
        if s.domain_expert_count < 0:
            v.append(SchemaViolation("validation.domainExperts", "non-negative"))
        if s.general_user_count < 0:
            v.append(SchemaViolation("validation.generalUsers", "non-negative"))

    if doc.usage_summary is not None:
        u = doc.usage_summary
        if u.total_uses < 0:
            v.append(SchemaViolation("usage.totalUses", "non-negative"))
        if not 0 <= u.success_rate <= 100:
            v.append(SchemaViolation("usage.successRate", "0-100"))
        if not 0 <= u.average_rating <= 10:
            v.append(SchemaViolation("usage.averageRating", "0-10"))
        if u.derivatives < 0:
            v.append(SchemaViolation("usage.derivatives", "non-negative"))

    return SchemaReport(v)


def _canonical_dict(doc: PromptDocument) -> dict:
    # Field order is the schema order; hashing depends on it.
    return {
        "content": {
            "system": doc.content.system,
            "user": doc.content.user,
            "examples": [{"input": e.input, "output": e.output} for e in doc.content.examples],
            "temperature": float(doc.content.temperature),
            "maxTokens": doc.content.max_tokens,
        },
        "metadata": {
            "title": doc.metadata.title,
            "description": doc.metadata.description,
            "domain": doc.metadata.domain,
            "subdomain": list(doc.metadata.subdomain),
            "targetModels": [
                {
                    "provider": t.provider,
                    "model": t.model,
                    "version": t.version,
                    "performance": t.performance,
                }
                for t in doc.metadata.target_models
            ],
            "outputFormat": doc.metadata.output_format,
            "language": doc.metadata.language,
            "tags": list(doc.metadata.tags),
            "difficulty": doc.metadata.difficulty,
            "estimatedTokens": doc.metadata.estimated_tokens,
        },
        "provenance": {
            "creator": doc.provenance.creator,
            "timestamp": doc.provenance.timestamp,
            "parentPromptId": doc.provenance.parent_prompt_id,
            "contributors": [
                {"address": c.address, "contribution": c.contribution, "timestamp": c.timestamp}
                for c in doc.provenance.contributors
            ],
            "license": doc.provenance.license,
        },
    }


def canonical_serialize(doc: PromptDocument) -> bytes:
    """Deterministic UTF-8 bytes of the author-controlled sections."""
    report = validate_schema(doc)
    if not report.ok:
        first = report.violations[0]
        raise SchemaInvalid(
            f"document violates schema: {first.field} ({first.constraint})",
            fields=[x.field for x in report.violations],
        )
    return json.dumps(
        _canonical_dict(doc), separators=(",", ":"), ensure_ascii=False, sort_keys=False
    ).encode("utf-8")


def to_wire(
    doc: PromptDocument,
    prompt_id: str | None = None,
    version: int | None = None,
) -> dict:
    """Full published JSON object, including registry and server sections."""
    out: dict = {}
    if prompt_id is not None:
        out["promptId"] = prompt_id
    if version is not None:
        out["version"] = version
    out.update(_canonical_dict(doc))
    if doc.validation_summary is not None:
        s = doc.validation_summary
        out["validation"] = {
            "score": s.score,
            "domainExperts": s.domain_expert_count,
            "generalUsers": s.general_user_count,
        }
    if doc.usage_summary is not None:
        u = doc.usage_summary
        out["usage"] = {
            "totalUses": u.total_uses,
            "successRate": u.success_rate,
            "averageRating": u.average_rating,
            "derivatives": u.derivatives,
        }
    return out


_TOP_KEYS = {"promptId", "version", "content", "metadata", "provenance", "validation", "usage"}
_CONTENT_KEYS = {"system", "user", "examples", "temperature", "maxTokens"}
_METADATA_KEYS = {
    "title", "description", "domain", "subdomain", "targetModels",
    "outputFormat", "language", "tags", "difficulty", "estimatedTokens",
}
_PROVENANCE_KEYS = {"creator", "timestamp", "parentPromptId", "contributors", "license"}


def _reject_unknown(obj: dict, allowed: set[str], where: str, strict: bool) -> None:
    if not strict:
        return
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown field(s) in {where}: {', '.join(sorted(unknown))}")


def _need(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise ParseError(f"missing field {where}.{key}")
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ParseError(f"field {where}.{key} must be a number")
        return float(val)
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ParseError(f"field {where}.{key} must be an integer")
    if kind is str and not isinstance(val, str):
        raise ParseError(f"field {where}.{key} must be a string")
    if kind is list and not isinstance(val, list):
        raise ParseError(f"field {where}.{key} must be a list")
    if kind is dict and not isinstance(val, dict):
        raise ParseError(f"field {where}.{key} must be an object")
    return val


def _str_list(obj: dict, key: str, where: str) -> list[str]:
    raw = _need(obj, key, list, where)
    if not all(isinstance(x, str) for x in raw):
        raise ParseError(f"field {where}.{key} must be a list of strings")
    return list(raw)


def parse_document(data: bytes | str, strict: bool = True) -> PromptDocument:
    """Parse external JSON into a PromptDocument.

    Raises ParseError for malformed encodings (and, in strict mode, for
    unknown fields) and SchemaInvalid when the parsed document violates a
    schema bound.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not valid UTF-8: {exc}") from None
    else:
        text = data
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"document is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("document must be a JSON object")
    return document_from_obj(raw, strict=strict)


def document_from_obj(raw: dict, strict: bool = True) -> PromptDocument:
    _reject_unknown(raw, _TOP_KEYS, "document", strict)
    for section in ("content", "metadata", "provenance"):
        if section not in raw:
            raise ParseError(f"missing section {section}")

    c = _need(raw, "content", dict, "document")
    _reject_unknown(c, _CONTENT_KEYS, "content", strict)
    examples = []
    for i, ex in enumerate(_need(c, "examples", list, "content")):
        if not isinstance(ex, dict):
            raise ParseError(f"content.examples[{i}] must be an object")
        _reject_unknown(ex, {"input", "output"}, f"content.examples[{i}]", strict)
        examples.append(
            Example(
                input=_need(ex, "input", str, f"content.examples[{i}]"),
                output=_need(ex, "output", str, f"content.examples[{i}]"),
            )
        )
    content = PromptContent(
        system=_need(c, "system", str, "content"),
        user=_need(c, "user", str, "content"),
        examples=examples,
        temperature=_need(c, "temperature", float, "content"),
        max_tokens=_need(c, "maxTokens", int, "content"),
    )

    m = _need(raw, "metadata", dict, "document")
    _reject_unknown(m, _METADATA_KEYS, "metadata", strict)
    targets = []
    for i, tm in enumerate(_need(m, "targetModels", list, "metadata")):
        if not isinstance(tm, dict):
            raise ParseError(f"metadata.targetModels[{i}] must be an object")
        _reject_unknown(tm, {"provider", "model", "version", "performance"},
                        f"metadata.targetModels[{i}]", strict)
        targets.append(
            TargetModel(
                provider=_need(tm, "provider", str, f"metadata.targetModels[{i}]"),
                model=_need(tm, "model", str, f"metadata.targetModels[{i}]"),
                version=_need(tm, "version", str, f"metadata.targetModels[{i}]"),
                performance=_need(tm, "performance", int, f"metadata.targetModels[{i}]"),
            )
        )
    metadata = PromptMetadata(
        title=_need(m, "title", str, "metadata"),
        description=_need(m, "description", str, "metadata"),
        domain=_need(m, "domain", str, "metadata"),
        subdomain=_str_list(m, "subdomain", "metadata"),
        target_models=targets,
        output_format=_need(m, "outputFormat", str, "metadata"),
        language=_need(m, "language", str, "metadata"),
        tags=_str_list(m, "tags", "metadata"),
        difficulty=_need(m, "difficulty", int, "metadata"),
        estimated_tokens=_need(m, "estimatedTokens", int, "metadata"),
    )

    p = _need(raw, "provenance", dict, "document")
    _reject_unknown(p, _PROVENANCE_KEYS, "provenance", strict)
    parent = p.get("parentPromptId")
    if parent is not None and not isinstance(parent, str):
        raise ParseError("provenance.parentPromptId must be a string or null")
    contributors = []
    for i, co in enumerate(_need(p, "contributors", list, "provenance")):
        if not isinstance(co, dict):
            raise ParseError(f"provenance.contributors[{i}] must be an object")
        _reject_unknown(co, {"address", "contribution", "timestamp"},
                        f"provenance.contributors[{i}]", strict)
        contributors.append(
            Contributor(
                address=_need(co, "address", str, f"provenance.contributors[{i}]"),
                contribution=_need(co, "contribution", str, f"provenance.contributors[{i}]"),
                timestamp=_need(co, "timestamp", int, f"provenance.contributors[{i}]"),
            )
        )
    provenance = Provenance(
        creator=_need(p, "creator", str, "provenance"),
        timestamp=_need(p, "timestamp", int, "provenance"),
        parent_prompt_id=parent,
        contributors=contributors,
        license=_need(p, "license", str, "provenance"),
    )

    doc = PromptDocument(content=content, metadata=metadata, provenance=provenance)
    report = validate_schema(doc)
    if not report.ok:
        first = report.violations[0]
        raise SchemaInvalid(
            f"document violates schema: {first.field} ({first.constraint})",
            fields=[x.field for x in report.violations],
        )
    return doc
