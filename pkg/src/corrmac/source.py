"""Correlated binary sources: a common bit observed through n independent BSCs."""

from dataclasses import dataclass
import math

import numpy as np

from ._rng import make_rng


@dataclass(frozen=True)
class CorrelationModel:
    """``x_k = b XOR z_k`` with ``b`` uniform and ``P(z_k = 0) = rho``."""

    n: int
    rho: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        if not 0.5 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0.5, 1], got {self.rho}")


@dataclass(frozen=True)
class SourceBlock:
    bits: np.ndarray  # (n, L) uint8

    @property
    def L(self) -> int:
        return self.bits.shape[1]


def generate_block(model: CorrelationModel, L: int, seed: int) -> SourceBlock:
    """Draw ``L`` epochs of the n correlated sources.

    Each column gets one uniform common bit, then every row keeps it with
    probability ``rho`` and flips it otherwise.
    """
    if L < 1:
        raise ValueError(f"block length must be >= 1, got {L}")
    rng = make_rng(seed)
    common = rng.integers(0, 2, size=L, dtype=np.uint8)
    flips = (rng.random((model.n, L)) >= model.rho).astype(np.uint8)
    return SourceBlock(bits=common[None, :] ^ flips)


def _log_joint_pmf(n: int, rho: float, zeros: int) -> float:
    if rho == 1.0:
        return math.log(0.5) if zeros in (0, n) else -math.inf
    a = zeros * math.log(rho) + (n - zeros) * math.log1p(-rho)
    b = zeros * math.log1p(-rho) + (n - zeros) * math.log(rho)
    return math.log(0.5) + np.logaddexp(a, b)


def joint_pmf(model: CorrelationModel, x) -> float:
    """Probability of the column vector ``x`` under the common-bit model.

    Depends on ``x`` only through its number of zeros. Evaluated in log space
    for ``n > 30`` so long vectors do not underflow before the final exp.
    """
    x = np.asarray(x)
    if x.ndim != 1 or x.size != model.n:
        raise ValueError(f"expected a length-{model.n} vector, got shape {x.shape}")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("joint_pmf expects binary entries")
    zeros = int(np.count_nonzero(x == 0))
    n, rho = model.n, model.rho
    if n > 30:
        return math.exp(_log_joint_pmf(n, rho, zeros))
    return 0.5 * (rho**zeros * (1 - rho) ** (n - zeros) + (1 - rho) ** zeros * rho ** (n - zeros))
