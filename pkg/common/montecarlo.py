"""
Monte Carlo engine for the relay-to-user phase.

Relays decode the user bits without error, so a trial draws one channel
realization, applies the scheme's selection and sends the relay symbols to
both users. Trials are grouped in blocks of ``TRIALS_PER_STREAM``; block b is
drawn from stream (master_seed, b) in a fixed order (gains, bits, noise) and
block summaries are merged in block order, so an estimate depends only on the
configuration and never on the number of workers.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from multiprocessing.pool import ThreadPool
from typing import Optional

import numpy as np
from tqdm import tqdm

from common import db_to_linear
from common.analytic import ber_asymptotic
from common.analytic import ber_exact
from common.analytic import has_closed_form
from common.channel import MAX_SEED
from common.channel import RngStream
from common.channel import SnrConfig
from common.channel import TRIALS_PER_STREAM
from common.channel import USERS
from common.channel import complex_normal
from common.channel import stream_for_trial
from common.environment import TWRC_SEED
from common.environment import TWRC_WORKERS
from common.phy import alamouti_combine
from common.phy import alamouti_encode
from common.phy import alamouti_receive
from common.phy import bpsk_demod
from common.phy import bpsk_mod
from common.phy import conditional_ber
from common.phy import mrc_combine
from common.phy import nc_decode
from common.phy import nc_encode
from common.phy import pair_effective_snrs
from common.phy import subset_effective_snrs
from common.selection import SINGLE_KINDS
from common.selection import StrategyKind
from common.selection import select_batch

SLOTS = 2
FAILED = "failed"


class Fidelity(Enum):
    BIT_LEVEL = "bit"
    SEMI_ANALYTIC = "semi"


def bits_per_user(kind):
    """One Alamouti block carries two bits per user; other schemes send one."""
    if kind in (StrategyKind.DOUBLE_MAX, StrategyKind.OPTIMAL_DUAL):
        return 2
    return 1


@dataclass(frozen=True)
class TrialConfig:
    scheme: StrategyKind
    snr: SnrConfig
    trials: int
    fidelity: Fidelity = Fidelity.SEMI_ANALYTIC
    master_seed: int = TWRC_SEED
    min_errors: int = 0
    workers: int = TWRC_WORKERS
    progress: bool = False

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if not 0 <= self.master_seed <= MAX_SEED:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.min_errors < 0:
            raise ValueError(f"min_errors cannot be negative, got {self.min_errors}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    @property
    def bits_per_user(self):
        return bits_per_user(self.scheme)

    @property
    def blocks(self):
        return math.ceil(self.trials / TRIALS_PER_STREAM)

    def block_size(self, block_index):
        return min(TRIALS_PER_STREAM, self.trials - block_index * TRIALS_PER_STREAM)


@dataclass(frozen=True)
class BlockSummary:
    count: int
    sum_user1: float
    sum_user2: float
    mean: float
    m2: float


@dataclass(frozen=True)
class BerEstimate:
    trials: int
    bits_per_user: int
    errors_user1: float
    errors_user2: float
    ber: float
    stderr: float
    fidelity: Fidelity = Fidelity.SEMI_ANALYTIC
    stopped_early: bool = False

    @property
    def ber_user1(self):
        return self.errors_user1 / (self.bits_per_user * self.trials)

    @property
    def ber_user2(self):
        return self.errors_user2 / (self.bits_per_user * self.trials)

    def ci95(self):
        half_width = 1.96 * self.stderr
        return max(0.0, self.ber - half_width), min(1.0, self.ber + half_width)


def draw_block(cfg, block_index):
    """Full-size draws of one stream; callers slice the first rows they need."""
    rng = RngStream(cfg.master_seed, block_index).generator()
    n_relays = cfg.snr.n_relays
    gains = complex_normal(rng, (TRIALS_PER_STREAM, n_relays, USERS))
    if cfg.fidelity == Fidelity.SEMI_ANALYTIC:
        return gains, None, None
    bits = rng.integers(0, 2, size=(TRIALS_PER_STREAM, USERS, SLOTS), dtype=np.int8)
    noise = complex_normal(rng, (TRIALS_PER_STREAM, n_relays, USERS, SLOTS))
    return gains, bits, noise


def _effective_snrs(kind, power_gains, decision, gamma_rd):
    rows = np.arange(len(power_gains))
    if kind in SINGLE_KINDS:
        return gamma_rd * power_gains[rows, decision]
    elif kind == StrategyKind.DOUBLE_MAX_NO_NC:
        return np.stack(
            [0.5 * gamma_rd * power_gains[rows, decision[:, u], u] for u in range(USERS)],
            axis=-1,
        )
    elif kind.selects_pair:
        return pair_effective_snrs(power_gains, decision[:, 0], decision[:, 1], gamma_rd)
    return subset_effective_snrs(power_gains, decision, gamma_rd)


def _single_relay_errors(gains, relay, bits, noise, gamma_rd):
    rows = np.arange(len(gains))
    relay_bits = nc_encode(bits[:, 0, 0], bits[:, 1, 0])
    x = math.sqrt(gamma_rd) * bpsk_mod(relay_bits)
    errors = np.empty((len(gains), USERS))
    for user in range(USERS):
        h = gains[rows, relay, user]
        received = h * x + noise[:, 0, user, 0]
        br_hat = bpsk_demod(np.conj(h) * received)
        partner = nc_decode(br_hat, bits[:, user, 0])
        errors[:, user] = partner != bits[:, 1 - user, 0]
    return errors


def _pair_errors(gains, pair, bits, noise, gamma_rd):
    rows = np.arange(len(gains))
    first, second = pair[:, 0], pair[:, 1]
    singleton = (first == second)[:, np.newaxis]
    relay_bits = nc_encode(bits[:, 0, :], bits[:, 1, :])
    symbols = bpsk_mod(relay_bits).astype(complex)
    amp = math.sqrt(gamma_rd / 2.0)
    codeword = alamouti_encode(symbols, amp, amp)
    errors = np.empty((len(gains), USERS))
    for user in range(USERS):
        h1 = gains[rows, first, user]
        h2 = gains[rows, second, user]
        user_noise = noise[:, 0, user, :]
        received = alamouti_receive(codeword, h1, h2, user_noise)
        statistics = alamouti_combine(received, h1, h2, amp, amp)
        # a single relay sends one symbol per slot at full power
        solo = h1[:, np.newaxis] * math.sqrt(gamma_rd) * symbols + user_noise
        solo_statistics = np.conj(h1)[:, np.newaxis] * solo
        statistics = np.where(singleton, solo_statistics, statistics)
        partner = nc_decode(bpsk_demod(statistics), bits[:, user, :])
        errors[:, user] = np.sum(partner != bits[:, 1 - user, :], axis=-1)
    return errors


def _subset_errors(gains, membership, bits, noise, gamma_rd):
    sizes = membership.sum(axis=-1)
    relay_bits = nc_encode(bits[:, 0, 0], bits[:, 1, 0])
    x = np.sqrt(gamma_rd / sizes) * bpsk_mod(relay_bits)
    errors = np.empty((len(gains), USERS))
    for user in range(USERS):
        h = gains[:, :, user] * membership
        received = h * x[:, np.newaxis] + noise[:, :, user, 0]
        br_hat = bpsk_demod(mrc_combine(received, h))
        partner = nc_decode(br_hat, bits[:, user, 0])
        errors[:, user] = partner != bits[:, 1 - user, 0]
    return errors


def _direct_errors(gains, pair, bits, noise, gamma_rd):
    """Without network coding each user's best relay forwards the partner's bit."""
    rows = np.arange(len(gains))
    amp = math.sqrt(gamma_rd / 2.0)
    errors = np.empty((len(gains), USERS))
    for user in range(USERS):
        h = gains[rows, pair[:, user], user]
        partner_bits = bits[:, 1 - user, 0]
        received = h * amp * bpsk_mod(partner_bits) + noise[:, 0, user, 0]
        errors[:, user] = bpsk_demod(np.conj(h) * received) != partner_bits
    return errors


def _bit_errors(kind, gains, decision, bits, noise, gamma_rd):
    if kind in SINGLE_KINDS:
        return _single_relay_errors(gains, decision, bits, noise, gamma_rd)
    elif kind == StrategyKind.DOUBLE_MAX_NO_NC:
        return _direct_errors(gains, decision, bits, noise, gamma_rd)
    elif kind.selects_pair:
        return _pair_errors(gains, decision, bits, noise, gamma_rd)
    return _subset_errors(gains, decision, bits, noise, gamma_rd)


def run_block(cfg, block_index, count=None):
    """Per-user statistics (count, 2): bit errors, or expected bit errors when semi-analytic."""
    count = cfg.block_size(block_index) if count is None else count
    gains, bits, noise = draw_block(cfg, block_index)
    gains = gains[:count]
    power_gains = np.abs(gains) ** 2
    gamma_rd = cfg.snr.gamma_rd
    decision = select_batch(cfg.scheme, power_gains, gamma_rd)
    if cfg.fidelity == Fidelity.SEMI_ANALYTIC:
        snrs = _effective_snrs(cfg.scheme, power_gains, decision, gamma_rd)
        return cfg.bits_per_user * conditional_ber(snrs)
    return _bit_errors(
        cfg.scheme, gains, decision, bits[:count], noise[:count], gamma_rd
    )


def run_trial(cfg, trial_index):
    """Per-user statistic of a single trial; identical to its row in the block run."""
    stream, row = stream_for_trial(cfg.master_seed, trial_index)
    return run_block(cfg, stream.stream_id, count=row + 1)[row]


def summarize_block(statistics, bits):
    per_trial = statistics.sum(axis=-1) / (USERS * bits)
    mean = float(np.mean(per_trial))
    return BlockSummary(
        count=len(per_trial),
        sum_user1=float(np.sum(statistics[:, 0])),
        sum_user2=float(np.sum(statistics[:, 1])),
        mean=mean,
        m2=float(np.sum((per_trial - mean) ** 2)),
    )


def merge_moments(count, mean, m2, block):
    """Chan's parallel update of (count, mean, M2)."""
    total = count + block.count
    delta = block.mean - mean
    mean = mean + delta * block.count / total
    m2 = m2 + block.m2 + delta * delta * count * block.count / total
    return total, mean, m2


def _block_runner(cfg):
    def run(block_index):
        return summarize_block(run_block(cfg, block_index), cfg.bits_per_user)

    return run


def estimate_ber(cfg):
    run = _block_runner(cfg)
    early_stop = cfg.min_errors > 0 and cfg.fidelity == Fidelity.BIT_LEVEL
    if cfg.min_errors > 0 and not early_stop:
        logging.debug("min_errors only applies to bit-level runs, ignoring")

    count, mean, m2 = 0, 0.0, 0.0
    sums_user1 = []
    sums_user2 = []
    stopped_early = False
    pool = ThreadPool(cfg.workers) if cfg.workers > 1 else None
    try:
        summaries = pool.imap(run, range(cfg.blocks)) if pool else map(run, range(cfg.blocks))
        progress = tqdm(
            summaries,
            total=cfg.blocks,
            desc=f"{cfg.scheme.value} N={cfg.snr.n_relays} {cfg.snr.snr_db:.1f}dB",
            disable=not cfg.progress,
            leave=False,
        )
        for block in progress:
            count, mean, m2 = merge_moments(count, mean, m2, block)
            sums_user1.append(block.sum_user1)
            sums_user2.append(block.sum_user2)
            if early_stop and math.fsum(sums_user1 + sums_user2) >= cfg.min_errors:
                stopped_early = count < cfg.trials
                break
    finally:
        if pool:
            pool.terminate()
            pool.join()

    errors_user1 = math.fsum(sums_user1)
    errors_user2 = math.fsum(sums_user2)
    bits = cfg.bits_per_user
    ber = (errors_user1 + errors_user2) / (USERS * bits * count)
    stderr = math.sqrt(m2 / (count - 1) / count) if count > 1 else 0.0
    if stopped_early:
        logging.info(f"Stopped after {count} trials with {cfg.min_errors}+ errors")
    return BerEstimate(
        trials=count,
        bits_per_user=bits,
        errors_user1=errors_user1,
        errors_user2=errors_user2,
        ber=ber,
        stderr=stderr,
        fidelity=cfg.fidelity,
        stopped_early=stopped_early,
    )


@dataclass(frozen=True)
class SweepSpec:
    schemes: tuple
    relays: tuple
    snr_db: tuple
    trials: int = 0
    fidelity: Fidelity = Fidelity.SEMI_ANALYTIC
    master_seed: int = TWRC_SEED
    min_errors: int = 0
    workers: int = TWRC_WORKERS
    progress: bool = False

    def __post_init__(self):
        if self.schemes and not self.snr_db:
            raise ValueError("the SNR grid must not be empty")
        if self.trials < 0:
            raise ValueError(f"trials cannot be negative, got {self.trials}")

    @property
    def points(self):
        return [
            (scheme, n_relays, snr_db)
            for scheme in self.schemes
            for n_relays in self.relays
            for snr_db in self.snr_db
        ]


@dataclass(frozen=True)
class SweepRow:
    scheme: StrategyKind
    n_relays: int
    snr_db: float
    gamma_rd: float
    trials: int
    fidelity: Fidelity
    seed: int
    ber_sim: Optional[float] = None
    stderr: Optional[float] = None
    ber_exact: Optional[float] = None
    ber_asymptotic: Optional[float] = None
    eval_method: Optional[str] = None


def evaluate_point(spec, scheme, n_relays, snr_db):
    snr = SnrConfig.from_db(snr_db, n_relays)
    ber_sim = stderr = ber_exact_value = ber_asymptotic_value = eval_method = None
    trials = 0
    if spec.trials > 0:
        estimate = estimate_ber(
            TrialConfig(
                scheme=scheme,
                snr=snr,
                trials=spec.trials,
                fidelity=spec.fidelity,
                master_seed=spec.master_seed,
                min_errors=spec.min_errors,
                workers=spec.workers,
                progress=spec.progress,
            )
        )
        ber_sim, stderr, trials = estimate.ber, estimate.stderr, estimate.trials
    if has_closed_form(scheme):
        exact = ber_exact(scheme, n_relays, snr.gamma_rd)
        ber_exact_value = exact.value
        eval_method = exact.method.value
        ber_asymptotic_value = ber_asymptotic(scheme, n_relays, snr.gamma_rd)
    return SweepRow(
        scheme=scheme,
        n_relays=n_relays,
        snr_db=snr_db,
        gamma_rd=snr.gamma_rd,
        trials=trials,
        fidelity=spec.fidelity,
        seed=spec.master_seed,
        ber_sim=ber_sim,
        stderr=stderr,
        ber_exact=ber_exact_value,
        ber_asymptotic=ber_asymptotic_value,
        eval_method=eval_method,
    )


def sweep(spec):
    """One row per (scheme, N, SNR); every point reuses the same master seed."""
    rows = []
    for scheme, n_relays, snr_db in tqdm(
        spec.points, desc="Sweep", disable=not spec.progress
    ):
        try:
            row = evaluate_point(spec, scheme, n_relays, snr_db)
            logging.info(
                f"{scheme.value} N={n_relays} {snr_db:g} dB: "
                f"sim={row.ber_sim} exact={row.ber_exact}"
            )
        except Exception:
            logging.exception(f"Failed point {scheme.value} N={n_relays} {snr_db:g} dB")
            row = SweepRow(
                scheme=scheme,
                n_relays=n_relays,
                snr_db=snr_db,
                gamma_rd=db_to_linear(snr_db),
                trials=0,
                fidelity=spec.fidelity,
                seed=spec.master_seed,
                eval_method=FAILED,
            )
        rows.append(row)
    return rows
