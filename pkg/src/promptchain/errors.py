"""Error taxonomy shared across the node.

Every error carries a stable machine code and a default HTTP status so the
API layer can translate internal failures into structured error bodies
without guessing.
"""

from __future__ import annotations


class PromptChainError(Exception):
    code = "internal_error"
    http_status = 500

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.message = message
        self.fields = fields or []


class SchemaInvalid(PromptChainError):
    code = "schema_invalid"
    http_status = 422


class ParseError(PromptChainError):
    code = "parse_error"
    http_status = 400


class NotFound(PromptChainError):
    code = "not_found"
    http_status = 404


class IntegrityViolation(PromptChainError):
    code = "integrity_violation"
    http_status = 500


class LinkUnresolvable(PromptChainError):
    code = "link_unresolvable"
    http_status = 422


class NoBackends(PromptChainError):
    code = "no_backends"
    http_status = 503


class UnknownCid(PromptChainError):
    code = "unknown_cid"
    http_status = 422


class InvalidParent(PromptChainError):
    code = "invalid_parent"
    http_status = 422


class DuplicateRegistration(PromptChainError):
    code = "duplicate_registration"
    http_status = 409


class InsufficientBalance(PromptChainError):
    """Balance too low for a staked or fee-charging action.

    The message always embeds both the required and the current amount,
    e.g. "You need at least 100 PCT tokens to register a prompt. Your
    current balance is 45 PCT."
    """

    code = "insufficient_balance"
    http_status = 402

    def __init__(self, required: str, current: str, action: str):
        self.required = required
        self.current = current
        super().__init__(
            f"You need at least {required} PCT tokens to {action}. "
            f"Your current balance is {current} PCT."
        )


class Unauthorized(PromptChainError):
    code = "unauthorized"
    http_status = 403


class NotValidated(PromptChainError):
    code = "not_validated"
    http_status = 409


class InsufficientReputation(PromptChainError):
    code = "insufficient_reputation"
    http_status = 403


class AlreadyValidated(PromptChainError):
    code = "already_validated"
    http_status = 409


class InsufficientStake(PromptChainError):
    code = "insufficient_stake"
    http_status = 402


class WrongState(PromptChainError):
    code = "wrong_state"
    http_status = 409


class QuorumNotMet(PromptChainError):
    code = "quorum_not_met"
    http_status = 409


class InsufficientVoterReputation(PromptChainError):
    code = "insufficient_voter_reputation"
    http_status = 403


class AlreadyResolved(PromptChainError):
    code = "already_resolved"
    http_status = 409


class EmptyCollection(PromptChainError):
    code = "empty_collection"
    http_status = 422


class ConfigInvalid(PromptChainError):
    code = "config_invalid"
    http_status = 400


class BadSignature(PromptChainError):
    code = "bad_signature"
    http_status = 401


class Expired(PromptChainError):
    code = "expired"
    http_status = 401


class Replayed(PromptChainError):
    code = "replayed"
    http_status = 401


class RateLimited(PromptChainError):
    code = "rate_limited"
    http_status = 429


class BadFilter(PromptChainError):
    code = "bad_filter"
    http_status = 400


class EmptyInput(PromptChainError):
    code = "empty_input"
    http_status = 400


class ReplayMismatch(PromptChainError):
    """Journal replay produced state that disagrees with the recorded events."""

    code = "replay_mismatch"
    http_status = 500
