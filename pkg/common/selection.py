"""
Relay selection strategies for the two-way relay channel.

Every strategy has a batch form working on power gains of shape (B, N, 2)
which the Monte Carlo engine calls, and a per-realization form returning a
``SelectionDecision``. Ties break to the lowest relay index, and for relay
sets to the lexicographically smallest sorted tuple.

The optimal baselines rank candidates with the Chernoff surrogate
B(g) = exp(-g) / 2 of Q(sqrt(2 g)), summed over both users in the log domain.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.special import logsumexp

from common.channel import USERS
from common.phy import pair_effective_snrs
from common.phy import subset_effective_snrs

MAX_SUBSET_RELAYS = 12
TIMER_SCALE = 1e-3
SUBSET_CHUNK_ROWS = 256


class StrategyKind(Enum):
    MIN_MAX_SINGLE = "s-rs-nc"
    OPTIMAL_SINGLE = "opt-single"
    DOUBLE_MAX = "d-rs-nc"
    OPTIMAL_DUAL = "opt-dual"
    OPTIMAL_SUBSET = "opt-subset"
    ALL_RELAYS_NC = "nc-no-rs"
    DOUBLE_MAX_NO_NC = "rs-no-nc"

    @classmethod
    def from_name(cls, name):
        try:
            return cls(name.lower())
        except ValueError:
            known = ", ".join(kind.value for kind in cls)
            raise ValueError(f"Unknown scheme {name!r}, expected one of: {known}")

    @property
    def selects_pair(self):
        return self in PAIR_KINDS

    @property
    def selects_subset(self):
        return self in SUBSET_KINDS


SINGLE_KINDS = frozenset({StrategyKind.MIN_MAX_SINGLE, StrategyKind.OPTIMAL_SINGLE})
PAIR_KINDS = frozenset(
    {
        StrategyKind.DOUBLE_MAX,
        StrategyKind.OPTIMAL_DUAL,
        StrategyKind.DOUBLE_MAX_NO_NC,
    }
)
SUBSET_KINDS = frozenset({StrategyKind.OPTIMAL_SUBSET, StrategyKind.ALL_RELAYS_NC})


@dataclass(frozen=True)
class SelectionDecision:
    relays: tuple
    power_shares: tuple
    scheme: StrategyKind

    def __post_init__(self):
        if not self.relays:
            raise ValueError("a decision selects at least one relay")
        if len(set(self.relays)) != len(self.relays):
            raise ValueError(f"selected relays must be distinct, got {self.relays}")
        if min(self.relays) < 0:
            raise IndexError(f"negative relay index in {self.relays}")
        if len(self.power_shares) != len(self.relays):
            raise ValueError("one power share per selected relay")
        if not np.isclose(sum(self.power_shares), 1.0, rtol=0, atol=1e-12):
            raise ValueError(f"power shares must sum to 1, got {self.power_shares}")
        if self.scheme in SINGLE_KINDS and len(self.relays) != 1:
            raise ValueError(f"{self.scheme.name} selects exactly one relay")
        if self.scheme in PAIR_KINDS and len(self.relays) > 2:
            raise ValueError(f"{self.scheme.name} selects one or two relays")

    @classmethod
    def equal_split(cls, relays, scheme):
        relays = tuple(int(r) for r in relays)
        return cls(relays, tuple([1.0 / len(relays)] * len(relays)), scheme)

    @property
    def size(self):
        return len(self.relays)


class BackoffMode(Enum):
    MIN_MAX = "minmax"
    USER_1 = "user1"
    USER_2 = "user2"


@dataclass(frozen=True)
class BackoffOutcome:
    winner: int
    timers: np.ndarray


def surrogate_log_sum_ber(snrs):
    """log of B(g_1) + B(g_2) for per-user SNRs on the last axis."""
    return logsumexp(-np.asarray(snrs, dtype=float), axis=-1) + np.log(0.5)


def _as_batch(power_gains):
    power_gains = np.asarray(power_gains, dtype=float)
    if power_gains.ndim != 3 or power_gains.shape[-1] != USERS:
        raise ValueError(f"power gains must be (B, N, 2), got {power_gains.shape}")
    if power_gains.shape[1] < 1:
        raise ValueError("at least one relay is required")
    return power_gains


def min_max_batch(power_gains):
    return np.argmax(np.min(_as_batch(power_gains), axis=-1), axis=-1)


def optimal_single_batch(power_gains, gamma_rd):
    scores = surrogate_log_sum_ber(gamma_rd * _as_batch(power_gains))
    return np.argmin(scores, axis=-1)


def double_max_batch(power_gains):
    """Per-user strongest relay; the two columns are (S_(1), S_(2))."""
    return np.argmax(_as_batch(power_gains), axis=-2)


@lru_cache(maxsize=None)
def dual_candidates(n_relays):
    """Singletons and unordered pairs, lexicographically ordered, as (first, second)."""
    sets = sorted(
        [(i,) for i in range(n_relays)] + list(combinations(range(n_relays), 2))
    )
    return np.array([(s[0], s[-1]) for s in sets], dtype=np.intp)


def optimal_dual_batch(power_gains, gamma_rd):
    power_gains = _as_batch(power_gains)
    candidates = dual_candidates(power_gains.shape[1])
    first = np.broadcast_to(candidates[:, 0], (power_gains.shape[0], len(candidates)))
    second = np.broadcast_to(candidates[:, 1], first.shape)
    snrs = pair_effective_snrs(power_gains[:, None], first, second, gamma_rd)
    best = np.argmin(surrogate_log_sum_ber(snrs), axis=-1)
    return candidates[best]


@lru_cache(maxsize=None)
def subset_memberships(n_relays):
    """0/1 rows for every nonempty subset, ordered lexicographically by sorted tuple."""
    if n_relays > MAX_SUBSET_RELAYS:
        raise ValueError(
            f"exhaustive subset search supports at most {MAX_SUBSET_RELAYS} relays, "
            f"got {n_relays}"
        )
    subsets = sorted(
        subset
        for size in range(1, n_relays + 1)
        for subset in combinations(range(n_relays), size)
    )
    memberships = np.zeros((len(subsets), n_relays))
    for row, subset in enumerate(subsets):
        memberships[row, list(subset)] = 1.0
    return memberships


def optimal_subset_batch(power_gains, gamma_rd):
    power_gains = _as_batch(power_gains)
    memberships = subset_memberships(power_gains.shape[1])
    chosen = np.empty((power_gains.shape[0], power_gains.shape[1]))
    for start in range(0, power_gains.shape[0], SUBSET_CHUNK_ROWS):
        chunk = power_gains[start : start + SUBSET_CHUNK_ROWS]
        snrs = subset_effective_snrs(chunk[:, None], memberships[None], gamma_rd)
        best = np.argmin(surrogate_log_sum_ber(snrs), axis=-1)
        chosen[start : start + len(chunk)] = memberships[best]
    return chosen


def all_relays_batch(power_gains):
    power_gains = _as_batch(power_gains)
    return np.ones(power_gains.shape[:2])


def select_batch(kind, power_gains, gamma_rd):
    """
    Batch dispatch. Single-relay kinds give indices (B,), pair kinds give
    (B, 2) index pairs (equal entries mean a singleton) and subset kinds give
    (B, N) membership rows.
    """
    if kind == StrategyKind.MIN_MAX_SINGLE:
        return min_max_batch(power_gains)
    elif kind == StrategyKind.OPTIMAL_SINGLE:
        return optimal_single_batch(power_gains, gamma_rd)
    elif kind in (StrategyKind.DOUBLE_MAX, StrategyKind.DOUBLE_MAX_NO_NC):
        return double_max_batch(power_gains)
    elif kind == StrategyKind.OPTIMAL_DUAL:
        return optimal_dual_batch(power_gains, gamma_rd)
    elif kind == StrategyKind.OPTIMAL_SUBSET:
        return optimal_subset_batch(power_gains, gamma_rd)
    elif kind == StrategyKind.ALL_RELAYS_NC:
        return all_relays_batch(power_gains)
    raise ValueError(f"Unsupported scheme {kind}")


def _single(realization):
    return realization.power_gains[np.newaxis]


def _pair_decision(pair, kind):
    first, second = (int(i) for i in pair)
    if first == second:
        return SelectionDecision((first,), (1.0,), kind)
    return SelectionDecision((first, second), (0.5, 0.5), kind)


def select_min_max(realization):
    relay = int(min_max_batch(_single(realization))[0])
    return SelectionDecision((relay,), (1.0,), StrategyKind.MIN_MAX_SINGLE)


def select_optimal_single(realization, cfg):
    relay = int(optimal_single_batch(_single(realization), cfg.gamma_rd)[0])
    return SelectionDecision((relay,), (1.0,), StrategyKind.OPTIMAL_SINGLE)


def select_double_max(realization, kind=StrategyKind.DOUBLE_MAX):
    return _pair_decision(double_max_batch(_single(realization))[0], kind)


def select_optimal_dual(realization, cfg):
    pair = optimal_dual_batch(_single(realization), cfg.gamma_rd)[0]
    return _pair_decision(pair, StrategyKind.OPTIMAL_DUAL)


def select_optimal_subset(realization, cfg):
    membership = optimal_subset_batch(_single(realization), cfg.gamma_rd)[0]
    return SelectionDecision.equal_split(
        np.flatnonzero(membership), StrategyKind.OPTIMAL_SUBSET
    )


def select_all_relays(realization):
    return SelectionDecision.equal_split(
        range(realization.n_relays), StrategyKind.ALL_RELAYS_NC
    )


def select(kind, realization, cfg):
    if kind == StrategyKind.MIN_MAX_SINGLE:
        return select_min_max(realization)
    elif kind == StrategyKind.OPTIMAL_SINGLE:
        return select_optimal_single(realization, cfg)
    elif kind in (StrategyKind.DOUBLE_MAX, StrategyKind.DOUBLE_MAX_NO_NC):
        return select_double_max(realization, kind)
    elif kind == StrategyKind.OPTIMAL_DUAL:
        return select_optimal_dual(realization, cfg)
    elif kind == StrategyKind.OPTIMAL_SUBSET:
        return select_optimal_subset(realization, cfg)
    elif kind == StrategyKind.ALL_RELAYS_NC:
        return select_all_relays(realization)
    raise ValueError(f"Unsupported scheme {kind}")


def backoff_timers(qualities, scale=TIMER_SCALE):
    """Timers inversely proportional to quality; a dead link never fires."""
    qualities = np.asarray(qualities, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(qualities > 0, scale / qualities, np.inf)


def run_backoff_selection(realization, mode=BackoffMode.MIN_MAX):
    """
    Idealised contention round: each relay counts down its timer and the
    first to expire takes the channel. No collisions or propagation delay.
    """
    mode = BackoffMode(mode)
    power_gains = realization.power_gains
    if mode == BackoffMode.MIN_MAX:
        qualities = np.min(power_gains, axis=-1)
    elif mode == BackoffMode.USER_1:
        qualities = power_gains[:, 0]
    else:
        qualities = power_gains[:, 1]
    timers = backoff_timers(qualities)
    winner = int(np.argmin(timers))
    logging.debug(f"Backoff round {mode.value}: relay {winner} fires first")
    return BackoffOutcome(winner=winner, timers=timers)


def run_two_step_backoff(realization):
    """Decentralised Double-Max: one contention round per user."""
    first = run_backoff_selection(realization, BackoffMode.USER_1).winner
    second = run_backoff_selection(realization, BackoffMode.USER_2).winner
    return _pair_decision((first, second), StrategyKind.DOUBLE_MAX)
