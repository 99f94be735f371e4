"""Token ledger, reward formulas, reputation, and dynamic parameters.

The ledger is exact integer arithmetic in 10^-18 PCT units; the sum of
balances, stakes and the incentive pool equals total supply after every
entry. Reward formulas are evaluated in float PCT (they feed per-epoch
payouts, not invariants) and then converted to integer units for payment,
clamped to the published reward range of the action that earned them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import InsufficientBalance
from .units import UNITS_PER_PCT, format_pct, units_from_pct_float

# Per-epoch reward ranges in PCT: (lower bound when nonzero, upper bound).
CREATOR_REWARD_RANGE = (0.0, 50.0)
VALIDATOR_REWARD_RANGE = (2.0, 10.0)
CURATOR_REWARD_RANGE = (5.0, 25.0)

PARAM_BOUNDS_FACTOR = 4.0
VELOCITY_EPSILON = 1e-12
DAMPING_RANGE = (0.9, 1.1)


@dataclass
class EconomicParams:
    alpha: float = 0.01
    beta: float = 4.0
    gamma: float = 0.005
    target_velocity: float = 0.02  # pool outflow per epoch / total supply
    token_velocity: float = 0.0
    total_usage: int = 0
    alpha_bounds: tuple[float, float] = field(default=None)  # type: ignore[assignment]
    beta_bounds: tuple[float, float] = field(default=None)  # type: ignore[assignment]
    gamma_bounds: tuple[float, float] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        # Bounds derive from the configured (initial) values: x/4 .. x*4.
        if self.alpha_bounds is None:
            self.alpha_bounds = (self.alpha / PARAM_BOUNDS_FACTOR, self.alpha * PARAM_BOUNDS_FACTOR)
        if self.beta_bounds is None:
            self.beta_bounds = (self.beta / PARAM_BOUNDS_FACTOR, self.beta * PARAM_BOUNDS_FACTOR)
        if self.gamma_bounds is None:
            self.gamma_bounds = (self.gamma / PARAM_BOUNDS_FACTOR, self.gamma * PARAM_BOUNDS_FACTOR)


def adjust_params(current: EconomicParams, epoch_velocity: float, epoch_usage: int) -> EconomicParams:
    """Multiplicative damping toward the target velocity. Pure function."""
    raw_scale = current.target_velocity / max(epoch_velocity, VELOCITY_EPSILON)
    scale = min(max(raw_scale, DAMPING_RANGE[0]), DAMPING_RANGE[1])

    def bounded(value: float, bounds: tuple[float, float]) -> float:
        return min(max(value, bounds[0]), bounds[1])

    return replace(
        current,
        alpha=bounded(current.alpha * scale, current.alpha_bounds),
        beta=bounded(current.beta * scale, current.beta_bounds),
        gamma=bounded(current.gamma * scale, current.gamma_bounds),
        token_velocity=epoch_velocity,
        total_usage=current.total_usage + epoch_usage,
    )


def creator_reward_raw(quality: int, uses: int, derivatives: int, params: EconomicParams) -> float:
    """Pre-clamp creator payout in PCT: alpha * Q * U * (1 + ln(max(D, 1)))."""
    if not 0 <= quality <= 10:
        raise ValueError("quality must be in [0, 10]")
    if uses < 0 or derivatives < 0:
        raise ValueError("uses and derivatives must be non-negative")
    return params.alpha * quality * uses * (1.0 + math.log(max(derivatives, 1)))


def validator_reward_raw(accuracy: float, expertise: float, params: EconomicParams) -> float:
    """Pre-clamp validator payout in PCT: beta * accuracy * E."""
    if not 0.0 <= accuracy <= 1.0:
        raise ValueError("accuracy must be in [0, 1]")
    return params.beta * accuracy * expertise


def curator_reward_raw(collection_quality: float, collection_usage: int, params: EconomicParams) -> float:
    """Pre-clamp curator payout in PCT: gamma * C_quality * C_usage."""
    if not 0.0 <= collection_quality <= 10.0:
        raise ValueError("collection quality must be in [0, 10]")
    if collection_usage < 0:
        raise ValueError("collection usage must be non-negative")
    return params.gamma * collection_quality * collection_usage


def clamp_reward_units(raw_pct: float, reward_range: tuple[float, float]) -> int:
    """Zero activity pays zero; positive rewards are clamped into range."""
    if raw_pct <= 0.0:
        return 0
    lo, hi = reward_range
    return units_from_pct_float(min(max(raw_pct, lo), hi))


def creator_reward(quality: int, uses: int, derivatives: int, params: EconomicParams) -> int:
    return clamp_reward_units(creator_reward_raw(quality, uses, derivatives, params),
                              CREATOR_REWARD_RANGE)


def validator_reward(accuracy: float, expertise: float, params: EconomicParams) -> int:
    return clamp_reward_units(validator_reward_raw(accuracy, expertise, params),
                              VALIDATOR_REWARD_RANGE)


def curator_reward(collection_quality: float, collection_usage: int, params: EconomicParams) -> int:
    return clamp_reward_units(curator_reward_raw(collection_quality, collection_usage, params),
                              CURATOR_REWARD_RANGE)


@dataclass
class ReputationInputs:
    prompt_quality: float  # mean validation score of the user's validated prompts
    validation_accuracy: float  # 10 * fraction of the user's ballots not slashed
    community_engagement: float  # capped activity score


def reputation(inputs: ReputationInputs) -> float:
    """Cube root of the component product; zero if any component is zero.

    Equal components return that component exactly, so balanced
    participation maps onto the scale without float fuzz.
    """
    q, v, c = inputs.prompt_quality, inputs.validation_accuracy, inputs.community_engagement
    for name, x in (("prompt_quality", q), ("validation_accuracy", v), ("community_engagement", c)):
        if not 0.0 <= x <= 10.0:
            raise ValueError(f"{name} must be in [0, 10]")
    if q == v == c:
        return float(q)
    if q == 0.0 or v == 0.0 or c == 0.0:
        return 0.0
    return (q * v * c) ** (1.0 / 3.0)


def engagement_score(comments: int, ballots: int, collections: int) -> float:
    """Capped log of raw activity counts; feeds the reputation product."""
    return min(10.0, math.log(1 + comments + ballots + collections))


@dataclass
class LedgerEntry:
    seq: int
    kind: str  # transfer | stake | release | slash | reward | fee
    frm: str
    to: str
    amount: int
    cause: str


@dataclass
class Claim:
    """A reward owed at epoch distribution, before funding."""
    address: str
    role: str  # creator | validator | curator
    owed: int
    cause: str


@dataclass
class Payment:
    address: str
    role: str
    owed: int
    paid: int
    cause: str


def pro_rata_payouts(claims: list[Claim], pool: int) -> list[Payment]:
    """Scale claims down uniformly when the pool cannot cover them."""
    total = sum(c.owed for c in claims)
    if total <= pool:
        return [Payment(c.address, c.role, c.owed, c.owed, c.cause) for c in claims]
    return [Payment(c.address, c.role, c.owed, c.owed * pool // total, c.cause)
            for c in claims]


class Ledger:
    """Balances, stakes, the incentive pool, and the entry journal."""

    POOL = "pool"

    def __init__(self):
        self.balances: dict[str, int] = {}
        self.stakes: dict[str, int] = {}
        self.pool = 0
        self.total_supply = 0
        self.entries: list[LedgerEntry] = []

    def genesis(self, balances: dict[str, int], pool_seed: int = 0) -> None:
        if self.total_supply:
            raise ValueError("genesis already applied")
        for addr, amount in balances.items():
            if amount < 0:
                raise ValueError(f"negative genesis balance for {addr}")
            self.balances[addr] = self.balances.get(addr, 0) + amount
        self.pool = pool_seed
        self.total_supply = sum(self.balances.values()) + pool_seed

    def balance(self, addr: str) -> int:
        return self.balances.get(addr, 0)

    def staked(self, addr: str) -> int:
        return self.stakes.get(addr, 0)

    def total_staked(self) -> int:
        return sum(self.stakes.values())

    def _log(self, kind: str, frm: str, to: str, amount: int, cause: str) -> None:
        self.entries.append(LedgerEntry(len(self.entries), kind, frm, to, amount, cause))

    def require_balance(self, addr: str, amount: int, action: str) -> None:
        have = self.balance(addr)
        if have < amount:
            raise InsufficientBalance(format_pct(amount), format_pct(have), action)

    def lock_stake(self, addr: str, amount: int, cause: str, action: str = "stake") -> None:
        self.require_balance(addr, amount, action)
        self.balances[addr] -= amount
        self.stakes[addr] = self.stakes.get(addr, 0) + amount
        self._log("stake", addr, addr, amount, cause)

    def release_stake(self, addr: str, amount: int, cause: str) -> None:
        if self.staked(addr) < amount:
            raise ValueError(f"cannot release {amount} from {addr}: only {self.staked(addr)} staked")
        self.stakes[addr] -= amount
        self.balances[addr] = self.balances.get(addr, 0) + amount
        self._log("release", addr, addr, amount, cause)

    def slash_stake(self, addr: str, amount: int, cause: str) -> None:
        if self.staked(addr) < amount:
            raise ValueError(f"cannot slash {amount} from {addr}: only {self.staked(addr)} staked")
        self.stakes[addr] -= amount
        self.pool += amount
        self._log("slash", addr, self.POOL, amount, cause)

    def pay_fee(self, addr: str, amount: int, cause: str, action: str = "pay the fee") -> None:
        self.require_balance(addr, amount, action)
        self.balances[addr] -= amount
        self.pool += amount
        self._log("fee", addr, self.POOL, amount, cause)

    def reward(self, addr: str, amount: int, cause: str) -> None:
        if amount > self.pool:
            raise ValueError(f"pool underfunded: {amount} > {self.pool}")
        self.pool -= amount
        self.balances[addr] = self.balances.get(addr, 0) + amount
        self._log("reward", self.POOL, addr, amount, cause)

    def assert_conservation(self) -> None:
        total = sum(self.balances.values()) + sum(self.stakes.values()) + self.pool
        if total != self.total_supply:
            raise AssertionError(
                f"conservation violated: {total} != supply {self.total_supply}"
            )

    def circulating(self) -> int:
        return sum(self.balances.values())


def slash_amount(stake: int, fraction_num: int = 1, fraction_den: int = 2) -> int:
    """Integer portion of a stake forfeited on slashing; remainder returns."""
    return stake * fraction_num // fraction_den


PCT = UNITS_PER_PCT  # re-export for callers that think in whole tokens
