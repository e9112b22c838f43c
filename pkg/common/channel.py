"""
Rayleigh fading realizations, AWGN samples and the SNR quantities of the
relay-to-user broadcast phase.

All power enters through the average link SNR ``gamma_rd``; the noise
variance is normalised to one. Random draws come from counter-based Philox
streams keyed by ``(master_seed, stream_id)`` so that any trial can be
regenerated on its own, in any order and on any worker.
"""
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from common import db_to_linear
from common import linear_to_db

USERS = 2
TRIALS_PER_STREAM = 4096
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class SnrConfig:
    gamma_rd: float
    n_relays: int
    noise_variance: float = 1.0

    def __post_init__(self):
        if not self.gamma_rd > 0:
            raise ValueError(f"gamma_rd must be positive, got {self.gamma_rd}")
        if int(self.n_relays) != self.n_relays or self.n_relays < 1:
            raise ValueError(f"n_relays must be a positive integer, got {self.n_relays}")
        if self.noise_variance != 1.0:
            raise ValueError("noise_variance is normalised to 1; scale gamma_rd instead")

    @classmethod
    def from_db(cls, snr_db, n_relays):
        return cls(gamma_rd=db_to_linear(snr_db), n_relays=n_relays)

    @property
    def snr_db(self):
        return linear_to_db(self.gamma_rd)


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value <= MAX_SEED:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {value}")

    def generator(self):
        seed_sequence = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_id,)
        )
        return np.random.Generator(np.random.Philox(seed_sequence))


def stream_for_trial(master_seed, trial_index):
    """Stream holding ``trial_index`` and the trial's row inside that stream."""
    block, row = divmod(trial_index, TRIALS_PER_STREAM)
    return RngStream(master_seed, block), row


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    gains: np.ndarray
    power_gains: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=complex)
        if gains.ndim != 2 or gains.shape[1] != USERS or gains.shape[0] < 1:
            raise ValueError(f"gains must have shape (N, 2), got {gains.shape}")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "power_gains", np.abs(gains) ** 2)

    @classmethod
    def from_power_gains(cls, power_gains):
        power_gains = np.asarray(power_gains, dtype=float)
        if np.any(power_gains < 0):
            raise ValueError("power gains must be non-negative")
        return cls(np.sqrt(power_gains).astype(complex))

    @property
    def n_relays(self):
        return self.gains.shape[0]


def complex_normal(rng, shape, variance=1.0):
    """Circularly symmetric complex Gaussian samples with total variance ``variance``."""
    parts = rng.standard_normal(tuple(shape) + (2,))
    return math.sqrt(variance / 2.0) * (parts[..., 0] + 1j * parts[..., 1])


def draw_realizations(cfg, stream, count):
    """``count`` consecutive realizations of shape (count, N, 2) from one stream."""
    rng = stream.generator()
    return complex_normal(rng, (count, cfg.n_relays, USERS))


def draw_realization(cfg, stream):
    return ChannelRealization(draw_realizations(cfg, stream, 1)[0])


def draw_noise(variance, count, stream):
    if not variance > 0:
        raise ValueError(f"noise variance must be positive, got {variance}")
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    return complex_normal(stream.generator(), (count,), variance)


def _check_relay(realization, relay):
    if not 0 <= relay < realization.n_relays:
        raise IndexError(
            f"relay {relay} out of range for {realization.n_relays} relays"
        )


def link_snr(realization, cfg, relay, user):
    """gamma_i^{u_j} = gamma_rd |h_{r_i,u_j}|^2, with ``user`` in {0, 1}."""
    _check_relay(realization, relay)
    return cfg.gamma_rd * realization.power_gains[relay, user]


def min_link_snr(realization, cfg, relay):
    _check_relay(realization, relay)
    return cfg.gamma_rd * float(np.min(realization.power_gains[relay]))


def link_snrs(power_gains, gamma_rd):
    return gamma_rd * np.asarray(power_gains)


def min_link_snrs(power_gains, gamma_rd):
    """Per-relay minimum of the two downlink SNRs, over the last two axes (..., N, 2)."""
    return gamma_rd * np.min(power_gains, axis=-1)
