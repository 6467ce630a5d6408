"""BPSK over a real AWGN link and the matching channel LLRs.

LLRs throughout the package are ``ln P(bit=0) / P(bit=1)``. Bit 0 is sent as
``-sqrt(ec)``, so a positive observation favours bit 1 and gives a negative
LLR.

The link SNR is ``gamma = 2 ec / n0``: the ratio of signal power to the noise
variance ``n0 / 2``. With that definition ``0.5 log2(1 + gamma)`` is the
capacity of the link and the channel LLR density (mean ``4 ec/n0``, variance
``8 ec/n0``) has message SNR ``mean / 2 = gamma``.
"""

from dataclasses import dataclass

import numpy as np

from ._rng import make_rng

LLR_CLIP = 50.0


@dataclass(frozen=True)
class ChannelConfig:
    ec: float
    n0: float = 1.0

    def __post_init__(self):
        if self.ec <= 0 or self.n0 <= 0:
            raise ValueError(f"ec and n0 must be positive, got ec={self.ec}, n0={self.n0}")

    @property
    def gamma(self) -> float:
        return 2.0 * self.ec / self.n0

    @classmethod
    def from_snr(cls, gamma: float, n0: float = 1.0) -> "ChannelConfig":
        return cls(ec=0.5 * gamma * n0, n0=n0)


def modulate(codeword, ec: float) -> np.ndarray:
    s = np.asarray(codeword)
    if not np.all((s == 0) | (s == 1)):
        raise ValueError("modulate expects binary entries")
    return np.sqrt(ec) * (2.0 * s - 1.0)


def add_awgn(signal, n0: float, seed: int) -> np.ndarray:
    if n0 <= 0:
        raise ValueError(f"n0 must be positive, got {n0}")
    signal = np.asarray(signal, dtype=float)
    rng = make_rng(seed)
    return signal + rng.normal(0.0, np.sqrt(n0 / 2.0), size=signal.shape)


def channel_llr(y, ec: float, n0: float) -> np.ndarray:
    if ec <= 0 or n0 <= 0:
        raise ValueError("ec and n0 must be positive")
    return -4.0 * np.sqrt(ec) * np.asarray(y, dtype=float) / n0


def transmit(codeword, cfg: ChannelConfig, seed: int) -> np.ndarray:
    """Modulate, add noise and return channel LLRs (clipped to +-LLR_CLIP)."""
    y = add_awgn(modulate(codeword, cfg.ec), cfg.n0, seed)
    return np.clip(channel_llr(y, cfg.ec, cfg.n0), -LLR_CLIP, LLR_CLIP)
