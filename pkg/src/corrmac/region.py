"""Feasible capacity region for n orthogonal AWGN links carrying correlated sources.

A capacity vector ``(lambda_1, ..., lambda_n)`` is feasible when every subset of
``p`` links carries at least ``r * [H(n) - H(n - p)]`` bits per channel use, where
``H(k)`` is the joint entropy of ``k`` sources and ``r`` the common code rate.
Because the source model is exchangeable the bound depends on ``p`` only, so
checking the ``p`` smallest capacities for each ``p`` is enough.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

TIGHT_TOL = 1e-9  # bits
DEFAULT_GRID_STEP = 1e-3
BISECTION_STEPS = 50


def _check_rho(rho: float) -> None:
    if not 0.5 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0.5, 1], got {rho}")


def binary_entropy(rho: float) -> float:
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {rho}")
    if rho in (0.0, 1.0):
        return 0.0
    return -rho * math.log2(rho) - (1 - rho) * math.log2(1 - rho)


def _log_pmf_by_zeros(n: int, rho: float) -> np.ndarray:
    """Natural log of the joint pmf of one n-vector, indexed by its zero count."""
    k = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        lr, lq = np.log(rho), np.log1p(-rho)
    if rho == 1.0:
        out = np.full(n + 1, -np.inf)
        out[0] = out[n] = np.log(0.5) if n > 0 else 0.0
        return out
    return np.log(0.5) + np.logaddexp(k * lr + (n - k) * lq, k * lq + (n - k) * lr)


def joint_entropy(n: int, rho: float) -> float:
    """Joint entropy ``H(n)`` in bits, via the binomial sum over the zero count."""
    _check_rho(rho)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return 0.0
    k = np.arange(n + 1)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    logp = _log_pmf_by_zeros(n, rho)
    ok = np.isfinite(logp)
    terms = np.exp(log_binom[ok] + logp[ok]) * logp[ok]
    return float(-terms.sum() / math.log(2))


def common_bit_equivocation(n: int, rho: float) -> float:
    """``H(b | x_1..x_n)`` in bits, summed directly (no cancellation).

    ``H(n) = 1 + n*Hb(rho) - H(b | x)``, so this is the gap to the upper
    entropy bound; it stays accurate long after that difference underflows.
    """
    _check_rho(rho)
    if n == 0:
        return 1.0
    if rho in (0.5, 1.0):
        return 1.0 if rho == 0.5 else 0.0
    k = np.arange(n + 1)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    logp = _log_pmf_by_zeros(n, rho)
    # posterior of b = 0 given k zeros: logistic of (2k - n) * log(rho / (1 - rho))
    t = (2 * k - n) * math.log(rho / (1 - rho))
    # binary entropy of sigmoid(t), in nats, stable for large |t|
    h = np.logaddexp(0.0, -np.abs(t)) + np.abs(t) / (1.0 + np.exp(np.abs(t)))
    return float(np.sum(np.exp(log_binom + logp) * h) / math.log(2))


def capacity_from_snr(gamma: float) -> float:
    if gamma < 0:
        raise ValueError(f"SNR must be >= 0, got {gamma}")
    return 0.5 * math.log2(1.0 + gamma)


def snr_from_capacity(lam: float) -> float:
    if lam < 0:
        raise ValueError(f"capacity must be >= 0, got {lam}")
    return 2.0 ** (2.0 * lam) - 1.0


@dataclass(frozen=True)
class CharacteristicPoints:
    lambda_bal: float
    lambda_unb: float
    lambda_lim: float


class ConstraintCheck(NamedTuple):
    p: int
    indices: tuple
    subset_sum: float
    bound: float

    @property
    def slack(self) -> float:
        return self.subset_sum - self.bound


@dataclass
class FeasibilityReport:
    feasible: bool
    tight: list = field(default_factory=list)
    violated: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.feasible


@dataclass(frozen=True)
class FeasibleRegion:
    n: int
    rho: float
    r: float
    entropies: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        _check_rho(self.rho)
        if not 0 < self.r <= 1:
            raise ValueError(f"rate must lie in (0, 1], got {self.r}")
        H = np.array([joint_entropy(k, self.rho) for k in range(self.n + 1)])
        H.flags.writeable = False
        object.__setattr__(self, "entropies", H)

    @property
    def bounds(self) -> np.ndarray:
        """``r [H(n) - H(n-p)]`` for ``p = 1..n``."""
        H = self.entropies
        return self.r * (H[-1] - H[-2::-1])

    def characteristic_points(self) -> CharacteristicPoints:
        if self.n < 2:
            raise ValueError("characteristic points need n >= 2")
        H = self.entropies
        return CharacteristicPoints(
            lambda_bal=self.r * H[-1] / self.n,
            lambda_unb=self.r * (H[-1] - H[-2]),
            lambda_lim=self.r * binary_entropy(self.rho),
        )

    def _feasible(self, lams: np.ndarray) -> bool:
        return bool(np.all(np.cumsum(np.sort(lams)) >= self.bounds))

    def is_feasible(self, lambdas: Sequence[float]) -> FeasibilityReport:
        lams = np.asarray(lambdas, dtype=float)
        if lams.shape != (self.n,):
            raise ValueError(f"expected {self.n} capacities, got shape {lams.shape}")
        if np.any(lams < 0):
            raise ValueError("capacities must be non-negative")
        order = np.argsort(lams, kind="stable")
        sums = np.cumsum(lams[order])
        report = FeasibilityReport(feasible=True)
        for p, (s, b) in enumerate(zip(sums, self.bounds), start=1):
            check = ConstraintCheck(p, tuple(int(i) for i in order[:p]), float(s), float(b))
            if s < b:
                report.feasible = False
                report.violated.append(check)
            elif s - b <= TIGHT_TOL:
                report.tight.append(check)
        return report

    def boundary_projection(self, fixed=(), grid_step=DEFAULT_GRID_STEP, lambda1_max=None):
        """Lower border of the ``(lambda_1, lambda_2)`` slice at fixed ``lambda_3..lambda_n``.

        For each grid abscissa the minimal feasible ``lambda_2`` is found by
        bisection; abscissae where no ``lambda_2`` works are left out.
        """
        fixed = np.asarray(fixed, dtype=float).reshape(-1)
        if fixed.size != self.n - 2:
            raise ValueError(f"need {self.n - 2} fixed capacities for n={self.n}, got {fixed.size}")
        if grid_step <= 0:
            raise ValueError("grid_step must be positive")
        if self.n > 2:
            unb = self.r * (self.entropies[-1] - self.entropies[-2])
            if np.any(fixed < unb - TIGHT_TOL):
                raise ValueError(f"fixed capacities must be >= lambda_unb(n) = {unb:.6f}")
        top = self.r * self.entropies[-1]
        if not self._feasible(np.concatenate(([top, top], fixed))):
            raise ValueError("fixed capacities leave the (lambda1, lambda2) slice empty")
        if lambda1_max is None:
            lambda1_max = top
        grid = np.arange(0.0, lambda1_max + 0.5 * grid_step, grid_step)
        curve = []
        for lam1 in grid:
            point = np.concatenate(([lam1, top], fixed))
            if not self._feasible(point):
                continue
            point[1] = 0.0
            if self._feasible(point):
                curve.append((float(lam1), 0.0))
                continue
            lo, hi = 0.0, top
            for _ in range(BISECTION_STEPS):
                point[1] = 0.5 * (lo + hi)
                if self._feasible(point):
                    hi = point[1]
                else:
                    lo = point[1]
            curve.append((float(lam1), float(hi)))
        return curve


@lru_cache(maxsize=256)
def _region(n: int, rho: float, r: float) -> FeasibleRegion:
    return FeasibleRegion(n, rho, r)


def characteristic_points(n: int, rho: float, r: float) -> CharacteristicPoints:
    if n < 2:
        raise ValueError("characteristic points need n >= 2")
    return _region(n, rho, r).characteristic_points()


def is_feasible(lambdas: Sequence[float], rho: float, r: float) -> FeasibilityReport:
    return _region(len(lambdas), rho, r).is_feasible(lambdas)


def boundary_projection(n, rho, r, fixed=(), grid_step=DEFAULT_GRID_STEP, lambda1_max=None):
    return _region(n, rho, r).boundary_projection(fixed, grid_step, lambda1_max)
