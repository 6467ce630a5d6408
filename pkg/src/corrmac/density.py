"""Numerical LLR densities on a uniform symmetric grid and the transforms used in EXIT analysis.

Message SNR follows the consistency convention: a consistent Gaussian LLR
density with mean ``mu`` has variance ``2 mu`` and SNR ``mu / 2``.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from ._rng import make_rng
from .channel import LLR_CLIP
from .jcd import ConnectionNode, _combine

MIN_SNR_SAMPLES = 10_000
MIN_MC_SAMPLES = 100_000
LEAKAGE_LIMIT = 1e-4


@dataclass(frozen=True)
class LlrGrid:
    """Bin centres ``-half_width, ..., 0, ..., +half_width`` spaced by ``step``."""

    half_width: float = 60.0
    step: float = 0.05

    def __post_init__(self):
        k = self.half_width / self.step
        if self.step <= 0 or abs(k - round(k)) > 1e-9:
            raise ValueError("half_width must be a positive multiple of step")

    @cached_property
    def size(self) -> int:
        return 2 * round(self.half_width / self.step) + 1

    @cached_property
    def centers(self) -> np.ndarray:
        return (np.arange(self.size) - self.size // 2) * self.step

    def index(self, x) -> np.ndarray:
        return np.clip(np.rint(np.asarray(x) / self.step).astype(np.int64) + self.size // 2, 0, self.size - 1)


DEFAULT_GRID = LlrGrid()


@dataclass(frozen=True)
class NumericPdf:
    grid: LlrGrid
    mass: np.ndarray
    leakage: float = 0.0  # mass that fell off the grid and was folded into the edge bins

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    @property
    def mean(self) -> float:
        return float(self.mass @ self.grid.centers / self.total)

    @property
    def var(self) -> float:
        c = self.grid.centers - self.mean
        return float(self.mass @ (c * c) / self.total)

    def mirrored(self) -> np.ndarray:
        return self.mass[::-1]

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw bin centres with probability proportional to their mass."""
        cdf = np.cumsum(self.mass)
        u = rng.random(size) * cdf[-1]
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), self.grid.size - 1)
        return self.grid.centers[idx]

    @classmethod
    def from_samples(cls, samples, grid: LlrGrid = DEFAULT_GRID) -> "NumericPdf":
        x = np.asarray(samples, dtype=float).ravel()
        off = np.count_nonzero(np.abs(x) > grid.half_width + 0.5 * grid.step)
        counts = np.bincount(grid.index(x), minlength=grid.size).astype(float)
        return cls(grid, counts / x.size, off / x.size)

    @classmethod
    def delta(cls, value: float, grid: LlrGrid = DEFAULT_GRID) -> "NumericPdf":
        mass = np.zeros(grid.size)
        mass[grid.index(value)] = 1.0
        return cls(grid, mass)


def gaussian_consistent_pdf(mu: float, grid: LlrGrid = DEFAULT_GRID, clip: float | None = LLR_CLIP) -> NumericPdf:
    """Gaussian with mean ``mu`` and variance ``2 mu``, binned by CDF differences.

    With ``clip`` the mass beyond ``+-clip`` is moved onto the ``+-clip`` bins,
    which is what LLR clipping does to the messages. Without it, mass beyond
    the grid is folded into the edge bins and more than ``LEAKAGE_LIMIT`` of it
    is an error.
    """
    if mu < 0:
        raise ValueError(f"mean must be >= 0, got {mu}")
    if mu == 0:
        return NumericPdf.delta(0.0, grid)
    sigma = np.sqrt(2.0 * mu)
    edges = np.concatenate(([-np.inf], grid.centers[:-1] + 0.5 * grid.step, [np.inf]))
    mass = np.diff(ndtr((edges - mu) / sigma))
    lo, hi = grid.centers[0] - 0.5 * grid.step, grid.centers[-1] + 0.5 * grid.step
    leakage = float(ndtr((lo - mu) / sigma) + ndtr(-(hi - mu) / sigma))
    if clip is None:
        if leakage > LEAKAGE_LIMIT:
            raise ValueError(f"grid too narrow for mean {mu}: {leakage:.2e} of the mass falls outside")
    else:
        if clip > grid.half_width:
            raise ValueError(f"clip level {clip} lies outside the grid")
        c = grid.index(clip)
        mass[c] += mass[c + 1:].sum()
        mass[c + 1:] = 0.0
        c = grid.index(-clip)
        mass[c] += mass[:c].sum()
        mass[:c] = 0.0
        leakage = 0.0
    return NumericPdf(grid, mass, leakage)


def implied_channel_snr(pdf: NumericPdf) -> float:
    return pdf.mean / 2.0


def bsc_flip(pdf: NumericPdf, rho: float) -> NumericPdf:
    """Keep the LLR sign with probability ``rho``, flip it otherwise."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return NumericPdf(pdf.grid, rho * pdf.mass + (1.0 - rho) * pdf.mirrored(), pdf.leakage)


def connection_output_density(inputs: Sequence[NumericPdf], rho: float, n: int, mc_samples: int = 10**6,
                              seed: int = 0) -> NumericPdf:
    """Density of the connection-node output for one decoder, by Monte Carlo.

    Each of the ``n - 1`` input densities (messages about an all-zero
    sequence) goes through two cascaded sign-flip stages with parameter
    ``rho``: source bit to common bit, common bit to this decoder's bit.
    Independent samples are then pushed through the connection rule and
    histogrammed.
    """
    if len(inputs) != n - 1:
        raise ValueError(f"need {n - 1} input densities for n={n}, got {len(inputs)}")
    if mc_samples < MIN_MC_SAMPLES:
        raise ValueError(f"mc_samples must be >= {MIN_MC_SAMPLES}, got {mc_samples}")
    grid = inputs[0].grid
    node = ConnectionNode(n, rho)
    draws = np.empty((n - 1, mc_samples))
    for k, pdf in enumerate(inputs):
        if pdf.grid != grid:
            raise ValueError("all input densities must share one grid")
        draws[k] = bsc_flip(bsc_flip(pdf, rho), rho).sample(make_rng(seed, k), mc_samples)
    return NumericPdf.from_samples(_combine(node, draws), grid)


def convolve_channel(apriori: NumericPdf, channel: NumericPdf) -> NumericPdf:
    """Density of the sum of independent a-priori and channel LLRs.

    Mass pushed past the grid ends is folded into the edge bins and recorded
    as leakage.
    """
    if apriori.grid != channel.grid:
        raise ValueError("densities live on different grids")
    grid = apriori.grid
    full = np.convolve(apriori.mass, channel.mass)
    c = grid.size // 2
    mass = full[c:c + grid.size].copy()
    below, above = full[:c].sum(), full[c + grid.size:].sum()
    mass[0] += below
    mass[-1] += above
    return NumericPdf(grid, mass, apriori.leakage + channel.leakage + below + above)


def measure_output_snr(llr_samples) -> float:
    """Message SNR under consistency: sample mean over two."""
    x = np.asarray(llr_samples, dtype=float).ravel()
    if x.size < MIN_SNR_SAMPLES:
        raise ValueError(f"need at least {MIN_SNR_SAMPLES} samples, got {x.size}")
    return float(x.mean() / 2.0)


def measure_output_snr_var(llr_samples) -> float:
    """Diagnostic estimate ``mean^2 / var``; agrees with the mean-based one for consistent Gaussians."""
    x = np.asarray(llr_samples, dtype=float).ravel()
    if x.size < MIN_SNR_SAMPLES:
        raise ValueError(f"need at least {MIN_SNR_SAMPLES} samples, got {x.size}")
    v = x.var()
    return float("inf") if v == 0 else float(x.mean() ** 2 / v)
