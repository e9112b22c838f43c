"""
BPSK, XOR network coding, Alamouti STBC and MRC for the relay-to-user phase.

Symbols carry amplitude sqrt(share * gamma_rd) because the noise variance is
one: a relay holding the whole relay power transmits at SNR gamma_rd.
"""
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

EQUAL_SPLIT = (0.5, 0.5)


def q_function(x):
    return norm.sf(x)


def conditional_ber(snr):
    """Error probability of a coherent BPSK decision at post-combining SNR ``snr``."""
    return q_function(np.sqrt(2.0 * np.asarray(snr, dtype=float)))


def bpsk_mod(bits):
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def bpsk_demod(samples):
    # A statistic of exactly zero decodes to bit 0
    return (np.real(samples) < 0).astype(np.int8)


def nc_encode(b1, b2):
    return np.bitwise_xor(b1, b2)


def nc_decode(br_hat, own):
    return np.bitwise_xor(br_hat, own)


@dataclass(frozen=True)
class StbcBlock:
    """Two network-coded symbols sent by the relay pair over two slots."""

    symbols: tuple
    gamma_rd: float
    power_shares: tuple = EQUAL_SPLIT

    def __post_init__(self):
        if len(self.symbols) != 2:
            raise ValueError("an Alamouti block carries exactly two symbols")
        if len(self.power_shares) != 2 or min(self.power_shares) < 0:
            raise ValueError(f"invalid power shares {self.power_shares}")
        if not np.isclose(sum(self.power_shares), 1.0, rtol=0, atol=1e-12):
            raise ValueError(f"power shares must sum to 1, got {self.power_shares}")
        if not self.gamma_rd > 0:
            raise ValueError(f"gamma_rd must be positive, got {self.gamma_rd}")

    @property
    def amplitudes(self):
        return tuple(np.sqrt(share * self.gamma_rd) for share in self.power_shares)

    def matrix(self):
        """Rows are the two relays, columns the two symbol slots."""
        return alamouti_encode(np.asarray(self.symbols, dtype=complex), *self.amplitudes)


def alamouti_encode(symbols, amp1, amp2):
    """Alamouti codeword(s) for symbols of shape (..., 2); result is (..., 2, 2)."""
    s0 = symbols[..., 0]
    s1 = symbols[..., 1]
    codeword = np.empty(np.shape(s0) + (2, 2), dtype=complex)
    codeword[..., 0, 0] = amp1 * s0
    codeword[..., 0, 1] = -amp2 * np.conj(s1)
    codeword[..., 1, 0] = amp2 * s1
    codeword[..., 1, 1] = amp1 * np.conj(s0)
    return codeword


def alamouti_receive(codeword, h1, h2, noise):
    """Samples at one user over both slots, channel static across the block."""
    h1 = np.asarray(h1)[..., np.newaxis]
    h2 = np.asarray(h2)[..., np.newaxis]
    return h1 * codeword[..., 0, :] + h2 * codeword[..., 1, :] + noise


def alamouti_combine(received, h1, h2, amp1, amp2):
    """Linear Alamouti combining; the statistic for each symbol is free of the other."""
    y0 = received[..., 0]
    y1 = np.conj(received[..., 1])
    first = amp1 * (np.conj(h1) * y0 + h2 * y1)
    second = amp2 * (np.conj(h2) * y0 - h1 * y1)
    return np.stack([first, second], axis=-1)


def alamouti_transmit_combine(block, h1, h2, noise):
    """
    Send ``block`` over (h1, h2) to one user, combine, and report the
    decision statistics together with each symbol's post-combining SNR.
    """
    amp1, amp2 = block.amplitudes
    codeword = block.matrix()
    received = alamouti_receive(codeword, h1, h2, np.asarray(noise, dtype=complex))
    statistics = alamouti_combine(received, h1, h2, amp1, amp2)
    branch_power = abs(h1) ** 2 + abs(h2) ** 2
    effective_snr = np.array([amp1**2, amp2**2]) * branch_power
    return statistics, effective_snr


def alamouti_effective_snr(realization, cfg, s1, s2):
    """Per-user SNR when relays s1 and s2 send an Alamouti block (full power if equal)."""
    n_relays = realization.n_relays
    for relay in (s1, s2):
        if not 0 <= relay < n_relays:
            raise IndexError(f"relay {relay} out of range for {n_relays} relays")
    return pair_effective_snrs(realization.power_gains, s1, s2, cfg.gamma_rd)


def pair_effective_snrs(power_gains, first, second, gamma_rd):
    """
    Vectorised form over (..., N, 2) power gains with index arrays ``first`` and
    ``second`` of shape (...); returns (..., 2) per-user SNRs.
    """
    power_gains = np.asarray(power_gains)
    first = np.asarray(first)
    second = np.asarray(second)
    g_first = np.take_along_axis(power_gains, first[..., None, None], axis=-2)[..., 0, :]
    g_second = np.take_along_axis(power_gains, second[..., None, None], axis=-2)[
        ..., 0, :
    ]
    same = (first == second)[..., None]
    return np.where(same, gamma_rd * g_first, 0.5 * gamma_rd * (g_first + g_second))


def mrc_combine(received, h):
    """Maximal-ratio combining over the last axis of orthogonal branches."""
    return np.sum(np.conj(h) * received, axis=-1)


def subset_effective_snrs(power_gains, membership, gamma_rd):
    """
    Orthogonal transmission from a relay subset with equal power split.

    ``membership`` is a 0/1 array (..., N); the result is (..., 2).
    """
    membership = np.asarray(membership, dtype=float)
    sizes = membership.sum(axis=-1, keepdims=True)
    return gamma_rd / sizes * np.einsum("...n,...nj->...j", membership, power_gains)


def mrc_effective_snrs(power_gains, gamma_rd):
    n_relays = np.shape(power_gains)[-2]
    return gamma_rd / n_relays * np.sum(power_gains, axis=-2)


def mrc_effective_snr(realization, cfg):
    snrs = mrc_effective_snrs(realization.power_gains, cfg.gamma_rd)
    return float(snrs[0]), float(snrs[1])
