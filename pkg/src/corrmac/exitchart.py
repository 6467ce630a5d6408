"""EXIT analysis of a component decoder inside the joint decoder.

The characteristic function ``Z(snr_in, gamma)`` maps the message SNRs coming
from the other ``n - 1`` decoders to the extrinsic SNR of one decoder at link
SNR ``gamma``. It is measured by density evolution through the connection
node followed by Monte Carlo decoding of the all-zero codeword:

1. consistent Gaussian densities with mean ``2 snr_in`` for the other decoders,
2. two sign-flip stages and the connection rule (:mod:`corrmac.density`),
3. the resulting a-priori samples fed to the real decoder together with
   AWGN channel LLRs of the all-zero codeword. Channel and a-priori LLRs add
   at the information positions inside the decoder, which is exactly the
   channel convolution of the density picture,
4. ``snr_out`` = mean/2 of the decoder's extrinsic LLRs.

All Monte Carlo draws are keyed on the settings seed and a replica index and
never on ``gamma`` or ``snr_in``, so different probes share random numbers
and ``Z`` is a deterministic function of its arguments.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ._rng import make_rng
from .channel import LLR_CLIP, ChannelConfig, transmit
from .density import (
    DEFAULT_GRID,
    LlrGrid,
    NumericPdf,
    connection_output_density,
    gaussian_consistent_pdf,
    measure_output_snr,
)
from .region import snr_from_capacity

# Extrinsic LLRs are clipped to +-LLR_CLIP, so mean/2 can never exceed LLR_CLIP/2.
SNR_CEILING = LLR_CLIP / 2.0


class ExitError(RuntimeError):
    """Threshold search failed (no convergence inside the bracket)."""


@dataclass(frozen=True)
class ExitSettings:
    mc_samples: int = 10**6  # per connection-density propagation
    llr_samples: int = 10**4  # extrinsic LLRs per SNR measurement
    escape: float = 20.0  # snr_out at or above this counts as decoded
    unbalanced_snr_in: float = 50.0
    bracket: Tuple[float, float] = (0.02, 1.0)  # capacity
    tol: float = 0.005  # capacity
    max_steps: int = 30
    stall_rtol: float = 1e-2
    confirmations: int = 2
    iters: Optional[int] = None  # None: the code's fixed EXIT iteration count
    seed: int = 0
    grid: LlrGrid = field(default=DEFAULT_GRID, repr=False)

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        lo, hi = self.bracket
        if not 0 < lo < hi:
            raise ValueError(f"bracket must satisfy 0 < lo < hi, got {self.bracket}")
        if not 0 < self.escape < SNR_CEILING:
            raise ValueError(f"escape must lie in (0, {SNR_CEILING}), got {self.escape}")
        if self.max_steps < 1 or self.confirmations < 1:
            raise ValueError("max_steps and confirmations must be >= 1")


class ExitPoint(NamedTuple):
    gamma: float
    snr_in: tuple
    snr_out: float


def _derived_seed(*keys) -> int:
    return int(make_rng(*keys).integers(0, 2**62))


@lru_cache(maxsize=256)
def _apriori_density(snr_in: tuple, rho: float, n: int, mc_samples: int, seed: int, grid: LlrGrid) -> NumericPdf:
    inputs = [gaussian_consistent_pdf(2.0 * s, grid) for s in snr_in]
    return connection_output_density(inputs, rho, n, mc_samples, seed)


def apriori_density(snr_in: Sequence[float], rho: float, n: int, settings: ExitSettings, rep: int = 0) -> NumericPdf:
    """Density of the connection-node output given the other decoders' message SNRs."""
    snr_in = tuple(float(s) for s in snr_in)
    if len(snr_in) != n - 1:
        raise ValueError(f"need {n - 1} input SNRs for n={n}, got {len(snr_in)}")
    if any(s < 0 for s in snr_in):
        raise ValueError(f"SNRs must be >= 0, got {snr_in}")
    return _apriori_density(snr_in, float(rho), n, settings.mc_samples,
                            _derived_seed(settings.seed, 1, rep), settings.grid)


def _iters(code, settings: ExitSettings) -> int:
    return settings.iters if settings.iters is not None else code.default_iters


def measure_extrinsic_snr(code, gamma: float, apriori: Optional[NumericPdf], settings: ExitSettings,
                          rep: int = 0) -> float:
    """Decode all-zero codewords at link SNR ``gamma`` with a-priori LLRs drawn from ``apriori``."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    blocks = math.ceil(settings.llr_samples / code.L)
    cfg = ChannelConfig.from_snr(gamma)
    zeros = np.zeros(code.N, dtype=np.uint8)
    ch = np.stack([transmit(zeros, cfg, seed=_derived_seed(settings.seed, 2, rep, b)) for b in range(blocks)])
    if apriori is None:
        ap = np.zeros((blocks, code.L))
    else:
        ap = apriori.sample(make_rng(settings.seed, 3, rep), (blocks, code.L))
    _, ext = code.decode(ch, ap, _iters(code, settings), early_stop=False)
    return measure_output_snr(ext)


def z_surface(code, gamma: float, snr_in: Sequence[float], rho: float, settings: ExitSettings = ExitSettings(),
              rep: int = 0) -> float:
    """Extrinsic SNR of one decoder given the other decoders' message SNRs ``snr_in``."""
    n = len(snr_in) + 1
    return measure_extrinsic_snr(code, gamma, apriori_density(snr_in, rho, n, settings, rep), settings, rep)


def standalone_snr(code, gamma: float, settings: ExitSettings = ExitSettings(), rep: int = 0) -> float:
    """Extrinsic SNR with no a-priori information."""
    return measure_extrinsic_snr(code, gamma, None, settings, rep)


def _bisect(converges, settings: ExitSettings) -> float:
    """Smallest capacity in the bracket at which ``converges`` holds, to within ``tol``."""
    lo, hi = settings.bracket
    if not converges(hi):
        raise ExitError(f"no convergence at the top of the search bracket (capacity {hi})")
    if converges(lo):
        raise ExitError(f"already converged at the bottom of the search bracket (capacity {lo})")
    while hi - lo > settings.tol:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _unbalanced_converges(code, gamma, snr_in, rho, settings, trace):
    for rep in range(settings.confirmations):
        out = z_surface(code, gamma, snr_in, rho, settings, rep)
        if trace is not None:
            trace.append(ExitPoint(gamma, snr_in, out))
        if out < settings.escape:
            return False
    return True


def find_lambda_unb(code, rho: float, n: int = 2, settings: ExitSettings = ExitSettings(),
                    trace: Optional[List[ExitPoint]] = None) -> float:
    """Unbalanced point: the smallest capacity at which the decoder converges on its own
    while all other decoders deliver messages of SNR ``settings.unbalanced_snr_in``.

    Convergence means ``snr_out >= escape`` on ``confirmations`` independent
    Monte Carlo replicas.
    """
    snr_in = (settings.unbalanced_snr_in,) * (n - 1)

    def converges(lam):
        return _unbalanced_converges(code, snr_from_capacity(lam), snr_in, rho, settings, trace)

    return _bisect(converges, settings)


def find_standalone_threshold(code, settings: ExitSettings = ExitSettings(),
                              trace: Optional[List[ExitPoint]] = None) -> float:
    """Single-user threshold under the same convergence test, without a-priori input."""

    def converges(lam):
        gamma = snr_from_capacity(lam)
        for rep in range(settings.confirmations):
            out = standalone_snr(code, gamma, settings, rep)
            if trace is not None:
                trace.append(ExitPoint(gamma, (), out))
            if out < settings.escape:
                return False
        return True

    return _bisect(converges, settings)


def balanced_trajectory(code, gamma: float, rho: float, n: int, settings: ExitSettings = ExitSettings(),
                        trace: Optional[List[ExitPoint]] = None) -> bool:
    """Iterate ``s <- Z(s, ..., s; gamma)`` from ``s = 0``.

    Returns True once ``s >= escape`` on ``confirmations`` consecutive steps,
    False when an update improves ``s`` by less than ``stall_rtol`` (a fixed
    point below escape) or the step budget runs out.
    """
    s, above = 0.0, 0
    for _ in range(settings.max_steps):
        out = z_surface(code, gamma, (s,) * (n - 1), rho, settings)
        if trace is not None:
            trace.append(ExitPoint(gamma, (s,) * (n - 1), out))
        if out >= settings.escape:
            above += 1
            if above >= settings.confirmations:
                return True
        else:
            above = 0
            if out <= s * (1.0 + settings.stall_rtol):
                return False
        s = out
    return False


def find_lambda_bal(code, rho: float, n: int = 2, settings: ExitSettings = ExitSettings(),
                    trace: Optional[List[ExitPoint]] = None) -> float:
    """Balanced point: the smallest common capacity at which the equal-SNR fixed-point
    iteration escapes to the decoded state."""

    def converges(lam):
        return balanced_trajectory(code, snr_from_capacity(lam), rho, n, settings, trace)

    return _bisect(converges, settings)
